//! Minimal local HTTP server for exercising the link checker.
//!
//! Routes: `/ok` 200, `/moved` 301 to `/ok`, `/gone` 404, `/flaky` drops the
//! connection without answering until its drop budget is spent then 200,
//! `/no-head` 405 on HEAD and 200 on GET, `/loop` redirects to itself.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

pub struct StubServer {
    addr: SocketAddr,
    state: Arc<State>,
    handle: Option<JoinHandle<()>>,
}

#[derive(Default)]
struct State {
    flaky_drops: AtomicUsize,
    connections: AtomicUsize,
    stop: AtomicBool,
}

impl StubServer {
    /// Binds an ephemeral port on 127.0.0.1; `/flaky` drops its first
    /// `flaky_drops` connections.
    pub fn start(flaky_drops: usize) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(State { flaky_drops: AtomicUsize::new(flaky_drops), ..State::default() });
        let st = state.clone();
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if st.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                st.connections.fetch_add(1, Ordering::SeqCst);
                let st = st.clone();
                thread::spawn(move || {
                    let _ = serve(stream, &st);
                });
            }
        });
        Ok(StubServer { addr, state, handle: Some(handle) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    /// Connections accepted so far.
    pub fn connections(&self) -> usize {
        self.state.connections.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.state.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, st: &State) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default();
    let path = parts.next().unwrap_or_default();
    let head = method == "HEAD";

    let (status, reason, location) = match path {
        "/ok" => (200, "OK", None),
        "/moved" => (301, "Moved Permanently", Some("/ok")),
        "/gone" => (404, "Not Found", None),
        "/loop" => (302, "Found", Some("/loop")),
        "/no-head" if head => (405, "Method Not Allowed", None),
        "/no-head" => (200, "OK", None),
        "/flaky" => {
            let dropped = st.flaky_drops.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok();
            if dropped {
                return stream.shutdown(std::net::Shutdown::Both);
            }
            (200, "OK", None)
        }
        _ => (404, "Not Found", None),
    };
    let body = if head { "" } else { reason };
    let mut out = format!("HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nConnection: close\r\n", reason.len());
    if let Some(loc) = location {
        out.push_str(&format!("Location: {loc}\r\n"));
    }
    out.push_str("\r\n");
    out.push_str(body);
    let mut stream = stream;
    stream.write_all(out.as_bytes())?;
    stream.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::linkcheck::{LinkCheckConfig, LinkChecker};
    use oc_core::schema::LinkOutcome;
    use std::time::Duration;

    #[test]
    fn checker_against_stub_routes() {
        let stub = StubServer::start(0).unwrap();
        let cfg = LinkCheckConfig { backoff: vec![Duration::ZERO], host_spacing: Duration::ZERO, ..Default::default() };
        let c = LinkChecker::http(cfg, Arc::new(FixedClock::at("t")));
        let cases = [
            ("/ok", LinkOutcome::Valid, Some(200)),
            ("/moved", LinkOutcome::Valid, Some(200)),
            ("/gone", LinkOutcome::Broken, Some(404)),
            ("/no-head", LinkOutcome::Valid, Some(200)),
            ("/loop", LinkOutcome::Unreachable, None),
        ];
        for (path, outcome, status) in cases {
            let st = c.check(&stub.url(path));
            assert_eq!((st.outcome, st.http_status), (outcome, status), "{path}");
        }
    }
}
