use proptest::prelude::*;
use termrisk::data::{classify, parse_csv, parse_csv_path, write_csv};
use termrisk::simulation::{chunk_rng, generate_dataset, StudyDesign};
use termrisk::{CategoryCounts, ModelParams};

#[test]
fn stanford_counts() {
    let raw = parse_csv_path(termrisk::STANFORD_CSV).unwrap();
    assert_eq!(raw.len(), 103);
    let (data, report) = classify(&raw).unwrap();
    assert_eq!(
        report.counts,
        CategoryCounts {
            p: 43,
            q: 24,
            r: 29,
            censored: 4
        }
    );
    let mut ids: Vec<&str> = report.dropped.iter().map(|d| d.id.as_str()).collect();
    ids.sort();
    assert_eq!(ids, ["15", "3", "45"]);
    assert_eq!(data.len(), 100);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(parse_csv_path("/nonexistent/subjects.csv"), Err(termrisk::Error::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulate_write_parse_round_trip(seed in any::<u64>(), n in 1usize..200, alpha in 0.2f64..1.0) {
        let th = ModelParams::new(alpha, 35.0, 0.6, 380.0, 0.5).unwrap();
        let design = StudyDesign::staggered_four_years(n).unwrap();
        let data = generate_dataset(&th, &design, &mut chunk_rng(seed, 0)).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, "s", &mut buf).unwrap();
        let raw = parse_csv(buf.as_slice()).unwrap();
        let (back, report) = classify(&raw).unwrap();
        prop_assert!(report.dropped.is_empty());
        prop_assert_eq!(back.records(), data.records());
    }
}
