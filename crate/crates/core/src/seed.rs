//! Deterministic seed catalog reproducing the published per-catalog and
//! per-category counts (204 entries: 94 datasets, 65 models, 28 use cases,
//! 17 OERs).
//!
//! Two models are real, named resources; every other entry is a synthetic
//! placeholder drawn from a fixed-seed generator. Placeholder URLs live under
//! `placeholder.example.org`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::validate::DEFAULT_LICENSE_ALLOWLIST;
use crate::schema::{
    canonical_serialize, mint_identifier, Catalog, CatalogEntry, ContributorRef, DomainDescriptors,
    EntryState, SourceRef, SCHEMA_VERSION,
};

pub const SEED: u64 = 20_251_201;
const PLACEHOLDER_HOST: &str = "https://placeholder.example.org";
const UNATTRIBUTED: &str = "Unattributed (seed fixture)";

/// (modalities, count) for datasets.
const DATASET_PLAN: [(&[&str], usize); 7] = [
    (&["ground-level rgb"], 64),
    (&["aerial rgb"], 10),
    (&["point cloud"], 9),
    (&["synthetic"], 8),
    (&["thermal"], 1),
    (&["video"], 1),
    (&["thermal", "video"], 1),
];

/// (task, count) for placeholder models; the two pose-estimation models are named.
const MODEL_PLAN: [(&str, usize); 7] = [
    ("object detection", 20),
    ("segmentation", 12),
    ("tracking", 2),
    ("slam", 3),
    ("image captioning", 2),
    ("3d reconstruction", 4),
    ("other", 20),
];

const USE_CASE_PLAN: [(&str, usize); 4] = [
    ("construction", 18),
    ("design", 6),
    ("preconstruction", 2),
    ("operations and maintenance", 2),
];

const OER_PLAN: [(&str, usize); 2] = [("textbook", 16), ("slides", 1)];

const SUBJECTS: [&str; 16] = [
    "Excavator",
    "Tower Crane",
    "Rebar",
    "Hard Hat",
    "Scaffold",
    "Concrete Crack",
    "Bridge Deck",
    "Drywall",
    "Facade",
    "Worker Activity",
    "Formwork",
    "Steel Beam",
    "Road Surface",
    "Site Safety",
    "Pipe Rack",
    "Brick Wall",
];
const APPLICATIONS: [&str; 6] = [
    "safety monitoring",
    "progress tracking",
    "quality inspection",
    "productivity analysis",
    "design optimization",
    "asset management",
];
const STAKEHOLDERS: [&str; 5] = ["contractors", "designers", "owners", "researchers", "educators"];
const TECHNOLOGIES: [&str; 6] = [
    "computer vision",
    "deep learning",
    "laser scanning",
    "bim",
    "uav",
    "large language models",
];

fn modality_noun(modality: &str) -> &'static str {
    match modality {
        "aerial rgb" => "Aerial Survey",
        "point cloud" => "Point Clouds",
        "synthetic" => "Synthetic Renders",
        "thermal" => "Thermal Scans",
        "video" => "Video Clips",
        _ => "Images",
    }
}

fn task_noun(task: &str) -> &'static str {
    match task {
        "object detection" => "Detector",
        "segmentation" => "Segmenter",
        "tracking" => "Tracker",
        "slam" => "Mapping Pipeline",
        "image captioning" => "Captioner",
        "3d reconstruction" => "Reconstructor",
        _ => "Analytics Toolkit",
    }
}

struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.rng.random_range(0..items.len())]
    }

    fn contributors(&mut self) -> Vec<ContributorRef> {
        let n = self.rng.random_range(1..=3);
        (0..n)
            .map(|_| ContributorRef {
                name: format!("Seed Contributor {:03}", self.rng.random_range(1..=400u32)),
                affiliation: None,
            })
            .collect()
    }

    fn descriptors(&mut self) -> DomainDescriptors {
        let mut d = DomainDescriptors::default();
        d.applications.insert(self.pick(&APPLICATIONS).into());
        d.stakeholders.insert(self.pick(&STAKEHOLDERS).into());
        d.technologies.insert(self.pick(&TECHNOLOGIES).into());
        d
    }

    fn placeholder(
        &mut self,
        catalog: Catalog,
        ordinal: usize,
        title: String,
        description: String,
        mut descriptors: DomainDescriptors,
    ) -> CatalogEntry {
        let extra = self.descriptors();
        descriptors.applications.extend(extra.applications);
        descriptors.stakeholders.extend(extra.stakeholders);
        descriptors.technologies.extend(extra.technologies);
        let contributors = self.contributors();
        let license = self.pick(&DEFAULT_LICENSE_ALLOWLIST);
        let year = self.rng.random_range(2016..=2025);
        let url = format!("{PLACEHOLDER_HOST}/{}/{}-{:03}", catalog.as_str(), catalog.id_tag(), ordinal);
        build(catalog, &title, description, contributors, license, &url, Some(year), descriptors)
    }
}

#[allow(clippy::too_many_arguments)]
fn build(
    catalog: Catalog,
    title: &str,
    description: String,
    contributors: Vec<ContributorRef>,
    license: &str,
    url: &str,
    year: Option<i32>,
    descriptors: DomainDescriptors,
) -> CatalogEntry {
    let first = contributors.first().map(|c| c.name.as_str()).unwrap_or("");
    // Titles are non-empty and URLs well formed by construction.
    let id = mint_identifier(catalog, title, first, url).expect("seed inputs are valid");
    CatalogEntry {
        id,
        catalog,
        title: title.into(),
        description,
        contributors,
        license: license.into(),
        access_url: url.into(),
        source: SourceRef { repository: "seed_fixture".into(), record_id: String::from(url.rsplit('/').next().unwrap_or("")) },
        year,
        descriptors,
        state: EntryState::Published,
        link_status: None,
        schema_version: SCHEMA_VERSION.into(),
        extras: BTreeMap::new(),
    }
}

fn named_models() -> Vec<CatalogEntry> {
    let pose = |modality: &str| {
        let mut d = DomainDescriptors::default();
        d.tasks.insert("pose estimation".into());
        d.modalities.insert(modality.into());
        d.applications.insert("safety monitoring".into());
        d.technologies.insert("computer vision".into());
        d
    };
    vec![
        build(
            Catalog::Model,
            "MultiWorker3DPose",
            "Multi-worker 3D pose estimation for construction site monitoring.".into(),
            vec![ContributorRef::named(UNATTRIBUTED)],
            "academic-use",
            &format!("{PLACEHOLDER_HOST}/model/multiworker3dpose"),
            Some(2025),
            pose("ground-level rgb"),
        ),
        build(
            Catalog::Model,
            "Repetitive Action Counter",
            "Counts repetitive worker actions from pose estimation keypoints.".into(),
            vec![ContributorRef::named(UNATTRIBUTED)],
            "academic-use",
            &format!("{PLACEHOLDER_HOST}/model/repetitive-action-counter"),
            Some(2024),
            pose("video"),
        ),
    ]
}

/// All 204 seed entries, published, sorted by id.
pub fn generate_seed_catalog() -> Vec<CatalogEntry> {
    let mut g = Generator { rng: ChaCha8Rng::seed_from_u64(SEED) };
    let mut out = Vec::with_capacity(204);

    let mut ordinal = 0;
    for (modalities, count) in DATASET_PLAN {
        for _ in 0..count {
            ordinal += 1;
            let subject = g.pick(&SUBJECTS);
            let title = format!("{subject} {} {ordinal:03}", modality_noun(modalities[modalities.len() - 1]));
            let mut d = DomainDescriptors::default();
            for m in modalities {
                d.modalities.insert((*m).into());
            }
            let description = format!(
                "Placeholder dataset of {} data about {}.",
                modalities.join(" and "),
                subject.to_lowercase()
            );
            out.push(g.placeholder(Catalog::Dataset, ordinal, title, description, d));
        }
    }

    ordinal = 0;
    for (task, count) in MODEL_PLAN {
        for _ in 0..count {
            ordinal += 1;
            let subject = g.pick(&SUBJECTS);
            let title = format!("{subject} {} {ordinal:03}", task_noun(task));
            let mut d = DomainDescriptors::default();
            d.tasks.insert(task.into());
            let modality = if matches!(task, "slam" | "3d reconstruction") { "point cloud" } else { "ground-level rgb" };
            d.modalities.insert(modality.into());
            let description = format!("Placeholder {task} model for {}.", subject.to_lowercase());
            out.push(g.placeholder(Catalog::Model, ordinal, title, description, d));
        }
    }
    out.extend(named_models());

    ordinal = 0;
    for (phase, count) in USE_CASE_PLAN {
        for _ in 0..count {
            ordinal += 1;
            let subject = g.pick(&SUBJECTS);
            let title = format!("{subject} Deployment Case {ordinal:03}");
            let mut d = DomainDescriptors::default();
            d.phases.insert(phase.into());
            let description = format!("Placeholder {phase}-phase use case involving {}.", subject.to_lowercase());
            out.push(g.placeholder(Catalog::UseCase, ordinal, title, description, d));
        }
    }

    ordinal = 0;
    for (format_term, count) in OER_PLAN {
        for _ in 0..count {
            ordinal += 1;
            let subject = g.pick(&SUBJECTS);
            let noun = if format_term == "slides" { "Lecture Slides" } else { "Open Textbook" };
            let title = format!("{subject} {noun} {ordinal:03}");
            let d = DomainDescriptors { oer_format: Some(format_term.into()), ..DomainDescriptors::default() };
            let description = format!("Placeholder open {format_term} on {}.", subject.to_lowercase());
            out.push(g.placeholder(Catalog::Oer, ordinal, title, description, d));
        }
    }

    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// NDJSON body for one catalog: one canonical entry per line, sorted by id.
pub fn to_ndjson<'a>(entries: impl IntoIterator<Item = &'a CatalogEntry>) -> String {
    let mut sorted: Vec<&CatalogEntry> = entries.into_iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::new();
    for e in sorted {
        // Canonical serialization is UTF-8 JSON.
        out.push_str(core::str::from_utf8(&canonical_serialize(e)).unwrap_or_default());
        out.push('\n');
    }
    out
}

/// Seed fixture files keyed by catalog (`<catalog>.ndjson`).
pub fn seed_fixture_files() -> BTreeMap<Catalog, String> {
    let all = generate_seed_catalog();
    Catalog::ALL
        .into_iter()
        .map(|c| (c, to_ndjson(all.iter().filter(|e| e.catalog == c))))
        .collect()
}
