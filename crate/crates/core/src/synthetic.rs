//! Seeded synthetic landmark corpora in the manifest format, used by tests,
//! benchmarks and the CLI when no real dataset is at hand.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::knowledge::{
    render_knowledge_document, Category, Dataset, DatasetError, GeoPoint, KnowledgeRecord, RsValue, RsVariable,
    Split, TaskExample, TaskKind, TemporalResolution,
};

/// Words that never spell a category label.
const WORDS: [&str; 48] = [
    "amber", "granite", "harbour", "northern", "quiet", "ancient", "river", "garden", "stone", "copper", "lantern",
    "meadow", "silver", "crimson", "valley", "summit", "coastal", "marble", "willow", "eastern", "festival",
    "terrace", "plaza", "gallery", "fountain", "orchard", "canal", "dome", "arch", "courtyard", "pavilion", "vault",
    "lagoon", "ridge", "spire", "market", "citadel", "cove", "causeway", "hall", "quarry", "mill", "observatory",
    "library", "lighthouse", "palace", "temple", "monastery",
];

const REGIONS: [&str; 12] = [
    "Norland", "Estvia", "Calder", "Morrow", "Ysolde", "Pellam", "Brisk", "Tarnow", "Ovela", "Quessa", "Rhune",
    "Saltmere",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub records: usize,
    /// `(train, test)` example counts per task.
    pub tasks: BTreeMap<TaskKind, (usize, usize)>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Full benchmark scale: 14,820 landmarks.
    pub fn full_scale() -> Self {
        let mut tasks = BTreeMap::new();
        tasks.insert(TaskKind::Captioning, (11_827, 2_993));
        tasks.insert(TaskKind::Classification, (11_827, 2_993));
        tasks.insert(TaskKind::VqaC, (18_103, 4_501));
        tasks.insert(TaskKind::VqaRsk, (11_827, 2_993));
        tasks.insert(TaskKind::VqaWk, (11_827, 2_993));
        SyntheticSpec {
            records: 14_820,
            tasks,
            seed: 7,
        }
    }

    /// `records` landmarks with one test example per record for `task`.
    pub fn single_task(records: usize, task: TaskKind, seed: u64) -> Self {
        SyntheticSpec {
            records,
            tasks: BTreeMap::from([(task, (0, records))]),
            seed,
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut s: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    let first = s[0].to_string();
    let cap = first[..1].to_uppercase() + &first[1..];
    s[0] = &cap;
    format!("{}.", s.join(" "))
}

fn paragraph(rng: &mut ChaCha8Rng, sentences: usize) -> String {
    (0..sentences)
        .map(|_| {
            let n = rng.random_range(5..12);
            sentence(rng, n)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn rs_number(value: f64, unit: &str, resolution: TemporalResolution, source: &str) -> RsVariable {
    RsVariable {
        value: RsValue::Number((value * 1000.0).round() / 1000.0),
        unit: unit.into(),
        temporal_resolution: resolution,
        source: source.into(),
    }
}

pub fn synthetic_image_ref(record_id: &str) -> String {
    format!("synthetic://images/{record_id}.png")
}

/// Landmark `index` of a corpus seeded with `seed`. Records cycle through
/// the categories in order.
pub fn synthetic_record(index: usize, seed: u64) -> KnowledgeRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let category = Category::ALL[index % Category::ALL.len()];
    let id = format!("R{index:05}");
    let w = |rng: &mut ChaCha8Rng| *WORDS.choose(rng).expect("non-empty");
    let name = format!("{} {} {index}", capitalise(w(&mut rng)), capitalise(w(&mut rng)));
    let mut r = KnowledgeRecord::new(&id, name, category);
    let region = *REGIONS.choose(&mut rng).expect("non-empty");
    r.area = format!("{}, {region}", capitalise(w(&mut rng)));
    r.location = Some(GeoPoint {
        latitude: (rng.random_range(-60.0..70.0f64) * 1e4).round() / 1e4,
        longitude: (rng.random_range(-180.0..180.0f64) * 1e4).round() / 1e4,
    });
    r.address = format!("{} {} Road, {region}", rng.random_range(1..400), capitalise(w(&mut rng)));
    r.physical_area = format!("{} hectares", rng.random_range(1..900));
    r.construction_period = format!("{}-{}", rng.random_range(1100..1800), rng.random_range(1800..2020));
    r.historical_background = paragraph(&mut rng, 3);
    r.major_events = paragraph(&mut rng, 1);
    r.architectural_characteristics = paragraph(&mut rng, 2);
    r.cultural_significance = paragraph(&mut rng, 1);
    r.primary_function = paragraph(&mut rng, 1);
    r.details = paragraph(&mut rng, 2);
    let monthly = TemporalResolution::Monthly;
    r.rs_fields.insert("NDVI".into(), rs_number(rng.random_range(-0.2..0.9), "", monthly, "Landsat 9"));
    r.rs_fields.insert("Ts".into(), rs_number(rng.random_range(-10.0..35.0), "°C", monthly, "MERRA-2 (M2T1NXSLV)"));
    r.rs_fields.insert(
        "Total_precipitation".into(),
        rs_number(rng.random_range(0.0..300.0), "mm", monthly, "ERA5 (Daily Aggregates)"),
    );
    r.image_ref = Some(synthetic_image_ref(&id));
    r
}

fn capitalise(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn rs_text(record: &KnowledgeRecord, name: &str) -> String {
    record.rs_fields.get(name).map(|v| v.value.to_string()).unwrap_or_default()
}

/// Query text and gold answers of example `j` of `task` about `record`.
fn example_content(task: TaskKind, record: &KnowledgeRecord, j: usize) -> (String, Vec<String>) {
    match task {
        TaskKind::Captioning => (String::new(), vec![render_knowledge_document(record).text()]),
        TaskKind::Classification => (String::new(), vec![record.category.clone()]),
        TaskKind::VqaC => match j % 2 {
            0 => ("What category does this landmark belong to?".into(), vec![record.category.clone()]),
            _ => ("What is the name of this landmark?".into(), vec![record.name.clone()]),
        },
        TaskKind::VqaRsk => ("What is the NDVI of this area?".into(), vec![rs_text(record, "NDVI")]),
        TaskKind::VqaWk => ("Where is this landmark?".into(), vec![record.area.clone()]),
    }
}

pub fn synthetic_dataset(spec: &SyntheticSpec) -> Result<Dataset, DatasetError> {
    let records: Vec<KnowledgeRecord> = (0..spec.records).map(|i| synthetic_record(i, spec.seed)).collect();
    let mut examples = Vec::new();
    if !records.is_empty() {
        for (t, (&task, &(train, test))) in spec.tasks.iter().enumerate() {
            let mut splits: Vec<Split> = std::iter::repeat_n(Split::Train, train)
                .chain(std::iter::repeat_n(Split::Test, test))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1 + t as u64));
            splits.shuffle(&mut rng);
            for (j, split) in splits.into_iter().enumerate() {
                let record = &records[j % records.len()];
                let (query_text, gold) = example_content(task, record, j);
                examples.push(TaskExample {
                    example_id: format!("{}-{j:06}", task.as_str()),
                    record_id: record.record_id.clone(),
                    task,
                    image_ref: record.image_ref.clone().unwrap_or_default(),
                    query_text,
                    gold,
                    split,
                });
            }
        }
    }
    Dataset::new(records, examples)
}
