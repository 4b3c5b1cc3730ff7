//! Labeling campaigns: run every benchmark x configuration cell through the
//! backend, classify outcomes, and persist the dataset.
//!
//! Completed cells are appended to a journal file as they finish, so an
//! interrupted campaign resumes without re-running them. Output rows are
//! materialized in benchmark-major, configuration-minor order regardless of
//! execution order or worker count.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::backend::{
    classify, classify_outcome, run_backend, BackendAdapter, BenchmarkSpec, OutcomeClass,
    RawVerdict, SpawnFailure, Verdict,
};
use crate::features::{extract_features, parse_file, ProgramFeatures, FEATURE_COUNT};
use crate::flags::{FlagGrid, FLAG_FIELD_COUNT};

/// Dimension of one training vector: program features then encoded flags.
pub const SAMPLE_DIM: usize = FEATURE_COUNT + FLAG_FIELD_COUNT;

pub const DEFAULT_TIMEOUT_S: f64 = 180.0;

/// Everything a campaign needs: benchmarks, grid, per-run timeout, workers.
#[derive(Debug, Clone)]
pub struct CampaignManifest {
    pub benchmarks: Vec<BenchmarkSpec>,
    pub grid: FlagGrid,
    pub timeout_s: f64,
    pub parallelism: usize,
}

/// One labeled (benchmark, configuration) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub bench: String,
    pub cfg_index: usize,
    pub features: ProgramFeatures,
    pub flags_encoded: [f64; FLAG_FIELD_COUNT],
    pub raw: RawVerdict,
    pub wall_time_s: f64,
    pub class: OutcomeClass,
}

impl DatasetRow {
    /// The 19-dimensional model input for this row.
    pub fn sample_vector(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(SAMPLE_DIM);
        x.extend_from_slice(&self.features.to_vector());
        x.extend_from_slice(&self.flags_encoded);
        x
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("invalid campaign settings: {0}")]
    InvalidSettings(String),
    #[error("journal line {line}: {message}")]
    Journal { line: usize, message: String },
    #[error(transparent)]
    Spawn(#[from] SpawnFailure),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset row {row}: {message}")]
    Format { row: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("split would leave one side empty ({train} of {total} benchmarks in train)")]
    DegenerateSplit { train: usize, total: usize },
}

// ---------------------------------------------------------------------------
// Manifest file
// ---------------------------------------------------------------------------

/// Parse the tab-separated manifest format:
/// `program_path <TAB> property_path <TAB> expected(true|false|unknown)`.
pub fn parse_manifest(text: &str) -> Result<Vec<BenchmarkSpec>, CampaignError> {
    let mut benchmarks = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CampaignError::Manifest {
                line: idx + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let expected = fields[2]
            .trim()
            .parse()
            .map_err(|e: String| CampaignError::Manifest {
                line: idx + 1,
                message: e,
            })?;
        benchmarks.push(BenchmarkSpec {
            program_path: fields[0].into(),
            property_path: fields[1].into(),
            expected,
        });
    }
    Ok(benchmarks)
}

pub fn read_manifest(path: &Path) -> Result<Vec<BenchmarkSpec>, CampaignError> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Journal
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellResult {
    raw: RawVerdict,
    wall_time_s: f64,
    class: OutcomeClass,
}

fn journal_line(bench: &str, cfg_index: usize, cell: &CellResult) -> String {
    format!(
        "{bench}\t{cfg_index}\t{}\t{}\t{}\n",
        cell.raw.tag(),
        format_time(cell.wall_time_s),
        cell.class
    )
}

/// Read completed cells from a journal. A malformed final line is tolerated
/// (torn write from a killed campaign); malformed interior lines are errors.
fn read_journal(path: &Path) -> Result<HashMap<(String, usize), CellResult>, CampaignError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut cells = HashMap::new();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_journal_line(line) {
            Ok((bench, cfg_index, cell)) => {
                cells.insert((bench, cfg_index), cell);
            }
            Err(message) if idx + 1 == lines.len() => {
                // Torn tail; the cell will simply re-run.
                let _ = message;
            }
            Err(message) => {
                return Err(CampaignError::Journal {
                    line: idx + 1,
                    message,
                });
            }
        }
    }
    Ok(cells)
}

fn parse_journal_line(line: &str) -> Result<(String, usize, CellResult), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    }
    let cfg_index: usize = fields[1]
        .parse()
        .map_err(|_| format!("invalid config index '{}'", fields[1]))?;
    let raw = RawVerdict::from_str(fields[2])?;
    let wall_time_s: f64 = fields[3]
        .parse()
        .map_err(|_| format!("invalid time '{}'", fields[3]))?;
    let class_value: u8 = fields[4]
        .parse()
        .map_err(|_| format!("invalid class '{}'", fields[4]))?;
    let class = OutcomeClass::new(class_value)
        .ok_or_else(|| format!("class {class_value} out of range"))?;
    Ok((
        fields[0].to_string(),
        cfg_index,
        CellResult {
            raw,
            wall_time_s,
            class,
        },
    ))
}

// ---------------------------------------------------------------------------
// Campaign runner
// ---------------------------------------------------------------------------

/// Run the full benchmark x grid campaign.
///
/// Features are extracted once per benchmark. Cells already present in the
/// journal are not re-run. A spawn failure aborts the campaign (the journal
/// keeps the completed cells); per-run backend errors become class-3 rows.
pub fn run_campaign(
    manifest: &CampaignManifest,
    adapter: &dyn BackendAdapter,
    journal_path: Option<&Path>,
) -> Result<Vec<DatasetRow>, CampaignError> {
    if manifest.timeout_s.is_nan() || manifest.timeout_s <= 0.0 {
        return Err(CampaignError::InvalidSettings(
            "timeout must be positive".into(),
        ));
    }
    if manifest.parallelism < 1 {
        return Err(CampaignError::InvalidSettings(
            "parallelism must be >= 1".into(),
        ));
    }

    let features: Vec<ProgramFeatures> = manifest
        .benchmarks
        .iter()
        .map(|b| Ok(extract_features(&parse_file(&b.program_path)?)))
        .collect::<Result<_, std::io::Error>>()?;

    let completed = match journal_path {
        Some(path) => read_journal(path)?,
        None => HashMap::new(),
    };

    let grid_len = manifest.grid.len();
    let mut cells: Vec<Option<CellResult>> = vec![None; manifest.benchmarks.len() * grid_len];
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for (b, bench) in manifest.benchmarks.iter().enumerate() {
        let id = bench.id();
        for c in 0..grid_len {
            match completed.get(&(id.clone(), c)) {
                Some(cell) => cells[b * grid_len + c] = Some(*cell),
                None => pending.push((b, c)),
            }
        }
    }

    let journal = match journal_path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            Some(Mutex::new(
                std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)?,
            ))
        }
        None => None,
    };

    let results = Mutex::new(cells);
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<SpawnFailure>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..manifest.parallelism.min(pending.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= pending.len() || failure.lock().unwrap().is_some() {
                    break;
                }
                let (b, c) = pending[i];
                let bench = &manifest.benchmarks[b];
                let config = manifest.grid.get(c).expect("config index in grid");
                match run_backend(bench, config, manifest.timeout_s, adapter) {
                    Ok(outcome) => {
                        let cell = CellResult {
                            raw: outcome.raw,
                            wall_time_s: outcome.wall_time_s,
                            class: classify_outcome(&outcome),
                        };
                        if let Some(journal) = &journal {
                            let mut file = journal.lock().unwrap();
                            let line = journal_line(&bench.id(), c, &cell);
                            let _ = file.write_all(line.as_bytes());
                            let _ = file.flush();
                        }
                        results.lock().unwrap()[b * grid_len + c] = Some(cell);
                    }
                    Err(spawn) => {
                        failure.lock().unwrap().get_or_insert(spawn);
                        break;
                    }
                }
            });
        }
    });

    if let Some(spawn) = failure.into_inner().unwrap() {
        return Err(CampaignError::Spawn(spawn));
    }
    let results = results.into_inner().unwrap();

    let mut rows = Vec::with_capacity(results.len());
    for (b, bench) in manifest.benchmarks.iter().enumerate() {
        for c in 0..grid_len {
            let cell = results[b * grid_len + c].expect("all cells completed");
            rows.push(DatasetRow {
                bench: bench.id(),
                cfg_index: c,
                features: features[b],
                flags_encoded: manifest.grid.get(c).unwrap().encode(),
                raw: cell.raw,
                wall_time_s: cell.wall_time_s,
                class: cell.class,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

fn dataset_header() -> Vec<String> {
    let mut header = vec!["bench".to_string(), "cfg".to_string()];
    header.extend((1..=FEATURE_COUNT).map(|i| format!("f{i}")));
    header.extend((1..=FLAG_FIELD_COUNT).map(|i| format!("g{i}")));
    header.extend(["verdict", "time_s", "class"].map(String::from));
    header
}

/// Serialize a time with full precision and at least three decimal places.
pub fn format_time(t: f64) -> String {
    let s = format!("{t}");
    match s.split_once('.') {
        Some((_, frac)) if frac.len() >= 3 => s,
        _ => format!("{t:.3}"),
    }
}

pub fn write_dataset<W: std::io::Write>(rows: &[DatasetRow], out: W) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(dataset_header())
        .map_err(csv_io_error)?;
    for row in rows {
        let mut record: Vec<String> = vec![row.bench.clone(), row.cfg_index.to_string()];
        record.extend(row.features.values().iter().map(u64::to_string));
        record.extend(row.flags_encoded.iter().map(|g| format!("{g}")));
        record.push(row.raw.tag().to_string());
        record.push(format_time(row.wall_time_s));
        record.push(row.class.to_string());
        writer.write_record(&record).map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_dataset_file(rows: &[DatasetRow], path: &Path) -> Result<(), DatasetError> {
    write_dataset(rows, std::fs::File::create(path)?)
}

fn csv_io_error(e: csv::Error) -> DatasetError {
    DatasetError::Io(std::io::Error::other(e))
}

/// The classes a (raw verdict, time) pair can legally carry. True/false raw
/// verdicts may have been judged correct (time-stratified), incorrect, or
/// unjudgeable; the others map one-to-one.
fn class_consistent(raw: RawVerdict, wall_time_s: f64, class: OutcomeClass) -> bool {
    match raw {
        RawVerdict::Timeout => class.value() == 4,
        RawVerdict::Unknown | RawVerdict::Error => class.value() == 3,
        RawVerdict::True | RawVerdict::False => {
            class == classify(Verdict::CorrectTrue, wall_time_s)
                || class.value() == 3
                || class.value() == 5
        }
    }
}

pub fn read_dataset<R: std::io::Read>(input: R) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let expected_header = dataset_header();
    {
        let header = reader.headers().map_err(csv_io_error)?;
        let found: Vec<&str> = header.iter().collect();
        if found
            != expected_header
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
        {
            return Err(DatasetError::Format {
                row: 0,
                message: format!("unexpected header {found:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let fail = |message: String| DatasetError::Format {
            row: row_no,
            message,
        };
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.len() != expected_header.len() {
            return Err(fail(format!(
                "expected {} fields, found {}",
                expected_header.len(),
                record.len()
            )));
        }
        let cfg_index: usize = record[1]
            .parse()
            .map_err(|_| fail(format!("invalid config index '{}'", &record[1])))?;
        let mut feature_values = [0u64; FEATURE_COUNT];
        for (i, value) in feature_values.iter_mut().enumerate() {
            *value = record[2 + i]
                .parse()
                .map_err(|_| fail(format!("invalid feature '{}'", &record[2 + i])))?;
        }
        let mut flags_encoded = [0f64; FLAG_FIELD_COUNT];
        for (i, value) in flags_encoded.iter_mut().enumerate() {
            *value = record[2 + FEATURE_COUNT + i].parse().map_err(|_| {
                fail(format!(
                    "invalid flag value '{}'",
                    &record[2 + FEATURE_COUNT + i]
                ))
            })?;
        }
        let raw =
            RawVerdict::from_str(&record[2 + FEATURE_COUNT + FLAG_FIELD_COUNT]).map_err(fail)?;
        let wall_time_s: f64 = record[3 + FEATURE_COUNT + FLAG_FIELD_COUNT]
            .parse()
            .map_err(|_| fail("invalid time".to_string()))?;
        let class_value: u8 = record[4 + FEATURE_COUNT + FLAG_FIELD_COUNT]
            .parse()
            .map_err(|_| fail("invalid class".to_string()))?;
        let class = OutcomeClass::new(class_value)
            .ok_or_else(|| fail(format!("class {class_value} out of range")))?;
        if !class_consistent(raw, wall_time_s, class) {
            return Err(fail(format!(
                "class {class} inconsistent with verdict '{}' at {}s",
                raw.tag(),
                format_time(wall_time_s)
            )));
        }
        rows.push(DatasetRow {
            bench: record[0].to_string(),
            cfg_index,
            features: features_from_values(&feature_values),
            flags_encoded,
            raw,
            wall_time_s,
            class,
        });
    }
    Ok(rows)
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<DatasetRow>, DatasetError> {
    read_dataset(std::fs::File::open(path)?)
}

fn features_from_values(values: &[u64; FEATURE_COUNT]) -> ProgramFeatures {
    ProgramFeatures {
        threads_created: values[0],
        threads_joined: values[1],
        mutex_locks: values[2],
        atomic_locks: values[3],
        global_var_accesses: values[4],
        global_fn_calls: values[5],
        binary_operators: values[6],
        nondet_variables: values[7],
        min_global_var_access: values[8],
        min_global_fn_calls: values[9],
        loop_iterations: values[10],
    }
}

// ---------------------------------------------------------------------------
// Train/holdout split
// ---------------------------------------------------------------------------

/// Split rows by benchmark: all rows of one benchmark land on the same side.
/// `fraction` of the benchmarks (rounded) go to the train side. Deterministic
/// for a given seed.
pub fn split_train(
    rows: &[DatasetRow],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<DatasetRow>, Vec<DatasetRow>), SplitError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut bench_ids: Vec<&str> = Vec::new();
    for row in rows {
        if !bench_ids.contains(&row.bench.as_str()) {
            bench_ids.push(&row.bench);
        }
    }
    bench_ids.sort_unstable();
    let total = bench_ids.len();
    let train_count = (fraction * total as f64).round() as usize;
    if train_count == 0 || train_count >= total {
        return Err(SplitError::DegenerateSplit {
            train: train_count.min(total),
            total,
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    bench_ids.shuffle(&mut rng);
    let train_ids: std::collections::HashSet<&str> =
        bench_ids[..train_count].iter().copied().collect();
    let (train, holdout) = rows
        .iter()
        .cloned()
        .partition(|row| train_ids.contains(row.bench.as_str()));
    Ok((train, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Expected, MockAdapter, RawRun};
    use crate::flags::canonical_grid;
    use std::time::Duration;

    fn write_bench(dir: &Path, name: &str, body: &str) -> BenchmarkSpec {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        BenchmarkSpec {
            program_path: path,
            property_path: dir.join("unreach-call.prp"),
            expected: Expected::True,
        }
    }

    fn small_grid() -> FlagGrid {
        let text = "1,None,1,1,0,0,0,0\n2,None,1,8,1,0,0,0\nU,Incr,4,U,0,1,0,0\n";
        FlagGrid::from_grid_text(text).unwrap()
    }

    #[test]
    fn manifest_round_trip_fields() {
        let text = "# comment\na.c\tprop.prp\ttrue\nb.i\tprop.prp\tfalse\nc.c\tprop.prp\tunknown\n";
        let benches = parse_manifest(text).unwrap();
        assert_eq!(benches.len(), 3);
        assert_eq!(benches[0].expected, Expected::True);
        assert_eq!(benches[1].expected, Expected::False);
        assert_eq!(benches[2].expected, Expected::Unspecified);
    }

    #[test]
    fn manifest_rejects_bad_lines() {
        assert!(matches!(
            parse_manifest("a.c\tprop.prp\n"),
            Err(CampaignError::Manifest { line: 1, .. })
        ));
        assert!(matches!(
            parse_manifest("a.c\tprop.prp\tmaybe\n"),
            Err(CampaignError::Manifest { line: 1, .. })
        ));
    }

    #[test]
    fn campaign_produces_bench_major_rows() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![
            write_bench(dir.path(), "a.c", "int main(){return 0;}"),
            write_bench(dir.path(), "b.c", "int g; int main(){return g;}"),
        ];
        let grid = small_grid();
        let mock = MockAdapter::from_script_text("* * true 1.0\n", grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches.clone(),
            grid,
            timeout_s: 10.0,
            parallelism: 2,
        };
        let rows = run_campaign(&manifest, &mock, None).unwrap();
        assert_eq!(rows.len(), 6);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.bench, benches[i / 3].id());
            assert_eq!(row.cfg_index, i % 3);
            assert_eq!(row.class.value(), 0);
        }
        // Features computed from the real files.
        assert_eq!(rows[3].features.global_var_accesses, 1);
    }

    #[test]
    fn campaign_is_deterministic_across_worker_counts() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![
            write_bench(dir.path(), "a.c", "int main(){return 0;}"),
            write_bench(dir.path(), "b.c", "int main(){while(1){}}"),
            write_bench(dir.path(), "c.c", "int g; int main(){return g;}"),
        ];
        let grid = small_grid();
        let script = "a.c cfg=0 true 1.0\na.c * unknown 2.0\nb.c * false 70.0\nc.c * true 200.0\n";
        let mock = MockAdapter::from_script_text(script, grid.clone()).unwrap();
        let mut datasets = Vec::new();
        for parallelism in [1, 4] {
            let manifest = CampaignManifest {
                benchmarks: benches.clone(),
                grid: grid.clone(),
                timeout_s: 100.0,
                parallelism,
            };
            datasets.push(run_campaign(&manifest, &mock, None).unwrap());
        }
        assert_eq!(datasets[0], datasets[1]);
        // c.c's scripted delay exceeds the timeout: class 4.
        assert!(datasets[0]
            .iter()
            .filter(|r| r.bench.ends_with("c.c"))
            .all(|r| r.class.value() == 4));
    }

    #[test]
    fn campaign_resumes_from_journal_without_rerunning() {
        struct CountingAdapter<'a> {
            inner: &'a MockAdapter,
            calls: AtomicUsize,
        }
        impl BackendAdapter for CountingAdapter<'_> {
            fn execute(
                &self,
                bench: &BenchmarkSpec,
                flag_args: &[String],
                timeout: Duration,
            ) -> Result<RawRun, SpawnFailure> {
                self.calls.fetch_add(1, Ordering::Relaxed);
                self.inner.execute(bench, flag_args, timeout)
            }
            fn verdict_patterns(&self) -> &[(String, RawVerdict)] {
                self.inner.verdict_patterns()
            }
        }

        let dir = tempfile::tempdir().unwrap();
        let benches = vec![
            write_bench(dir.path(), "a.c", "int main(){return 0;}"),
            write_bench(dir.path(), "b.c", "int main(){return 1;}"),
        ];
        let grid = small_grid();
        let mock = MockAdapter::from_script_text("* * true 1.0\n", grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches,
            grid,
            timeout_s: 10.0,
            parallelism: 1,
        };

        let journal_a = dir.path().join("full.journal");
        let full = run_campaign(&manifest, &mock, Some(&journal_a)).unwrap();

        // Keep the first half of the journal, as if the campaign was killed.
        let text = std::fs::read_to_string(&journal_a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let half = lines.len() / 2;
        let journal_b = dir.path().join("partial.journal");
        std::fs::write(&journal_b, format!("{}\n", lines[..half].join("\n"))).unwrap();

        let counting = CountingAdapter {
            inner: &mock,
            calls: AtomicUsize::new(0),
        };
        let resumed = run_campaign(&manifest, &counting, Some(&journal_b)).unwrap();
        assert_eq!(resumed, full);
        assert_eq!(counting.calls.load(Ordering::Relaxed), lines.len() - half);
    }

    #[test]
    fn campaign_tolerates_torn_journal_tail() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![write_bench(dir.path(), "a.c", "int main(){return 0;}")];
        let grid = small_grid();
        let mock = MockAdapter::from_script_text("* * true 1.0\n", grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches,
            grid,
            timeout_s: 10.0,
            parallelism: 1,
        };
        let journal = dir.path().join("torn.journal");
        // One good record, then a truncated line without trailing newline.
        let good = run_campaign(&manifest, &mock, None).unwrap();
        let keep = journal_line(
            &good[0].bench,
            0,
            &CellResult {
                raw: good[0].raw,
                wall_time_s: good[0].wall_time_s,
                class: good[0].class,
            },
        );
        std::fs::write(&journal, format!("{keep}{}\t1\ttru", good[0].bench)).unwrap();
        let rows = run_campaign(&manifest, &mock, Some(&journal)).unwrap();
        assert_eq!(rows, good);
    }

    #[test]
    fn spawn_failure_aborts_with_partial_journal() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![
            write_bench(dir.path(), "a.c", "int main(){return 0;}"),
            write_bench(dir.path(), "z.c", "int main(){return 0;}"),
        ];
        let grid = small_grid();
        // a.c works, z.c cannot spawn.
        let script = "a.c * true 1.0\nz.c * spawnfail 0\n";
        let mock = MockAdapter::from_script_text(script, grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches,
            grid,
            timeout_s: 10.0,
            parallelism: 1,
        };
        let journal = dir.path().join("abort.journal");
        let err = run_campaign(&manifest, &mock, Some(&journal)).unwrap_err();
        assert!(matches!(err, CampaignError::Spawn(_)));
        let completed = read_journal(&journal).unwrap();
        assert_eq!(completed.len(), 3, "a.c cells were checkpointed");
    }

    #[test]
    fn backend_errors_become_class_3_rows() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![write_bench(dir.path(), "a.c", "int main(){return 0;}")];
        let grid = small_grid();
        let mock = MockAdapter::from_script_text("a.c * error 0.5\n", grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches,
            grid,
            timeout_s: 10.0,
            parallelism: 1,
        };
        let rows = run_campaign(&manifest, &mock, None).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.class.value() == 3));
    }

    #[test]
    fn dataset_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let benches = vec![
            write_bench(dir.path(), "a.c", "int g; int main(){return g;}"),
            write_bench(dir.path(), "b.c", "int main(){int i; for(i=0;i<7;i++){}}"),
        ];
        let grid = canonical_grid();
        let script = "a.c * true 2.0\nb.c no_por=1 false 61.5\nb.c * unknown 0.125\n";
        let mock = MockAdapter::from_script_text(script, grid.clone()).unwrap();
        let manifest = CampaignManifest {
            benchmarks: benches,
            grid,
            timeout_s: 100.0,
            parallelism: 4,
        };
        let rows = run_campaign(&manifest, &mock, None).unwrap();
        assert_eq!(rows.len(), 480);
        let mut buf = Vec::new();
        write_dataset(&rows, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let mut buf = Vec::new();
        write_dataset(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("bench,cfg,f1,"));
        assert!(read_dataset(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn dataset_times_have_three_decimals() {
        assert_eq!(format_time(2.0), "2.000");
        assert_eq!(format_time(0.1), "0.100");
        assert_eq!(format_time(0.125), "0.125");
        assert_eq!(format_time(1.23456789), "1.23456789");
        assert_eq!("0.100".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn dataset_rejects_inconsistent_class() {
        let row = DatasetRow {
            bench: "a.c".into(),
            cfg_index: 0,
            features: ProgramFeatures::default(),
            flags_encoded: [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            raw: RawVerdict::Timeout,
            wall_time_s: 100.0,
            class: OutcomeClass::new(4).unwrap(),
        };
        let mut buf = Vec::new();
        write_dataset(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace(",timeout,100.000,4", ",timeout,100.000,0");
        match read_dataset(text.as_bytes()) {
            Err(DatasetError::Format { row: 1, .. }) => {}
            other => panic!("expected row-1 format error, got {other:?}"),
        }
    }

    #[test]
    fn dataset_rejects_wrong_header() {
        let text = "bench,cfg,oops\na.c,0,1\n";
        assert!(matches!(
            read_dataset(text.as_bytes()),
            Err(DatasetError::Format { row: 0, .. })
        ));
    }

    fn synthetic_rows(bench_count: usize, cfgs: usize) -> Vec<DatasetRow> {
        let mut rows = Vec::new();
        for b in 0..bench_count {
            for c in 0..cfgs {
                rows.push(DatasetRow {
                    bench: format!("bench_{b:02}.c"),
                    cfg_index: c,
                    features: ProgramFeatures::default(),
                    flags_encoded: [c as f64, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                    raw: RawVerdict::True,
                    wall_time_s: 1.0,
                    class: OutcomeClass::new(0).unwrap(),
                });
            }
        }
        rows
    }

    #[test]
    fn split_is_by_benchmark_and_deterministic() {
        let rows = synthetic_rows(10, 4);
        let (train, holdout) = split_train(&rows, 0.2, 42).unwrap();
        let train_benches: std::collections::HashSet<&str> =
            train.iter().map(|r| r.bench.as_str()).collect();
        let holdout_benches: std::collections::HashSet<&str> =
            holdout.iter().map(|r| r.bench.as_str()).collect();
        assert_eq!(train_benches.len(), 2);
        assert_eq!(holdout_benches.len(), 8);
        assert!(train_benches.is_disjoint(&holdout_benches));
        assert_eq!(train.len(), 8);
        let (train2, _) = split_train(&rows, 0.2, 42).unwrap();
        assert_eq!(train, train2);
        let (train3, _) = split_train(&rows, 0.2, 43).unwrap();
        let benches3: std::collections::HashSet<&str> =
            train3.iter().map(|r| r.bench.as_str()).collect();
        assert!(benches3.len() == 2);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let rows = synthetic_rows(3, 2);
        assert!(split_train(&rows, 0.01, 1).is_err());
        assert!(split_train(&rows, 0.99, 1).is_err());
        assert!(split_train(&[], 0.5, 1).is_err());
    }

    #[test]
    fn split_is_independent_of_row_order() {
        let mut rows = synthetic_rows(6, 3);
        let (train_a, _) = split_train(&rows, 0.5, 9).unwrap();
        rows.reverse();
        let (train_b, _) = split_train(&rows, 0.5, 9).unwrap();
        let a: std::collections::HashSet<&str> = train_a.iter().map(|r| r.bench.as_str()).collect();
        let b: std::collections::HashSet<&str> = train_b.iter().map(|r| r.bench.as_str()).collect();
        assert_eq!(a, b);
    }
}
