//! Canonical URL form used for identifier minting and repository matching.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;
use url::{Position, Url};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("malformed url: {0}")]
    Malformed(String),
}

/// Rewrites a URL into its canonical form.
///
/// Scheme and host are lowercased, `http` becomes `https`, a leading `www.`
/// is dropped from the host, the fragment and any `utm_*` query parameters
/// are removed, and trailing `/` and `.git` are stripped from the path.
/// Path case is preserved.
pub fn canonicalize_url(input: &str) -> Result<String, UrlError> {
    let trimmed = input.trim();
    let mut url = Url::parse(trimmed).map_err(|_| UrlError::Malformed(trimmed.to_string()))?;
    let host = match url.host_str() {
        Some(h) if !h.is_empty() => h.to_ascii_lowercase(),
        _ => return Err(UrlError::Malformed(trimmed.to_string())),
    };
    if url.scheme() == "http" {
        url.set_scheme("https")
            .map_err(|_| UrlError::Malformed(trimmed.to_string()))?;
    }
    if let Some(bare) = host.strip_prefix("www.") {
        if !bare.is_empty() {
            url.set_host(Some(bare))
                .map_err(|_| UrlError::Malformed(trimmed.to_string()))?;
        }
    }
    url.set_fragment(None);

    if let Some(query) = url.query() {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|pair| !pair.is_empty())
            .filter(|pair| {
                let key = pair.split('=').next().unwrap_or("");
                !key.to_ascii_lowercase().starts_with("utm_")
            })
            .collect();
        let rebuilt = kept.join("&");
        if rebuilt.is_empty() {
            url.set_query(None);
        } else {
            url.set_query(Some(&rebuilt));
        }
    }

    // set_path re-resolves dot segments, which can expose a new trailing
    // slash, so iterate to a fixed point.
    loop {
        let current = url.path().to_string();
        let mut path = current.clone();
        loop {
            let before = path.len();
            while path.len() > 1 && path.ends_with('/') {
                path.pop();
            }
            if path.len() >= 4 && path[path.len() - 4..].eq_ignore_ascii_case(".git") {
                path.truncate(path.len() - 4);
            }
            if path.len() == before {
                break;
            }
        }
        if path == current {
            break;
        }
        url.set_path(&path);
    }

    let head = &url[..Position::BeforePath];
    let tail = &url[Position::AfterPath..];
    let path = url.path();
    let mut out = String::with_capacity(url.as_str().len());
    out.push_str(head);
    if path != "/" {
        out.push_str(path);
    }
    out.push_str(tail);
    Ok(out)
}

/// Syntactic check for an absolute URL with a host.
pub fn is_absolute_url(input: &str) -> bool {
    canonicalize_url(input).is_ok()
}

/// Lowercased host of a URL, if it parses.
pub fn host_of(input: &str) -> Option<String> {
    Url::parse(input.trim())
        .ok()
        .and_then(|u| u.host_str().map(|h| h.to_ascii_lowercase()))
}
