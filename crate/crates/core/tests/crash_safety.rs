use chrono::{TimeZone, Utc};
use concert_core::filters::parse_filter;
use concert_core::persist::{read_store_doc, write_interrupted, CrashPoint, DataStore, StoreDoc};
use concert_core::synthgen::{self, generate, SynthParams};
use rand::Rng;

fn doc_with(n: usize) -> StoreDoc {
    let mut doc = StoreDoc::new();
    let now = Utc.with_ymd_and_hms(2020, 9, 1, 0, 0, 0).unwrap();
    for i in 0..n {
        let e = parse_filter(&format!("commits.total > {i} and posts.total >= {}", i % 3)).unwrap();
        doc.filters.save(&format!("f{i}"), e, now, false).unwrap();
    }
    doc
}

#[test]
fn interrupted_store_saves_leave_old_or_new() {
    let dir = tempfile::tempdir().unwrap();
    let ds = DataStore::open(dir.path()).unwrap();
    let out = generate(&SynthParams::new(3, 0)).unwrap();
    ds.create_course(&out.config, out.file(synthgen::ROSTER_FILE), out.file(synthgen::TEAMS_FILE), false)
        .unwrap();
    let path = ds.store_path("synth").unwrap();
    let mut r = concert_testkit::rng(99);
    let mut current = ds.load_store("synth").unwrap();
    for trial in 0..50 {
        let next = doc_with(trial % 7 + 1);
        let mut bytes = serde_json::to_vec_pretty(&next).unwrap();
        bytes.push(b'\n');
        let crash = match r.random_range(0..3) {
            0 => CrashPoint::PartialTemp(r.random_range(0..bytes.len())),
            1 => CrashPoint::BeforeRename,
            _ => CrashPoint::AfterRename,
        };
        write_interrupted(&path, &bytes, crash).unwrap();
        let loaded = read_store_doc(&path).expect("store stays loadable");
        if crash == CrashPoint::AfterRename {
            assert_eq!(loaded, next);
            current = next;
        } else {
            assert_eq!(loaded, current);
        }
        assert_eq!(ds.load("synth").unwrap().store, current);
    }
    // debris from the abandoned writes does not show up as a course
    assert_eq!(ds.course_ids().unwrap(), ["synth"]);
}
