//! File-backed course storage.
//!
//! ```text
//! <root>/<course_id>/course.json     title, term, milestones
//!                    roster.csv
//!                    teams.json
//!                    events/<source>.json
//!                    store.json      saved filters and templates
//! ```
//!
//! Every file is replaced by writing a temporary sibling and renaming it
//! over the target, so a reader sees either the old or the new file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emailer::TemplateStore;
use crate::filters::{is_valid_filter_name, FilterStore};
use crate::ingest::{load_roster, parse_source, resolve_events, IgnoreRules, IngestError, IngestReport, Roster, Source};
use crate::model::{ActivityEvent, Course, Milestone, ModelError};

pub const SCHEMA_VERSION: u32 = 1;

const COURSE_FILE: &str = "course.json";
const ROSTER_FILE: &str = "roster.csv";
const TEAMS_FILE: &str = "teams.json";
const STORE_FILE: &str = "store.json";
const EVENTS_DIR: &str = "events";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} is not readable: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{path} has schema_version {found}; this build reads {SCHEMA_VERSION}")]
    UnsupportedSchema { path: PathBuf, found: u32 },
    #[error("course `{0}` not found")]
    CourseNotFound(String),
    #[error("course `{0}` already exists")]
    CourseExists(String),
    #[error("invalid course id {0:?}: use letters, digits, `_` or `-`")]
    InvalidCourseId(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PersistError {
    pub fn kind(&self) -> &'static str {
        match self {
            PersistError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => "NotFound",
            PersistError::Io { .. } => "IoError",
            PersistError::Corrupt { .. } => "Corrupt",
            PersistError::UnsupportedSchema { .. } => "UnsupportedSchema",
            PersistError::CourseNotFound(_) => "NotFound",
            PersistError::CourseExists(_) => "NameExists",
            PersistError::InvalidCourseId(_) => "InvalidName",
            PersistError::Ingest(e) => e.kind(),
            PersistError::Model(_) => "ValidationError",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Course metadata kept in `course.json`; roster and teams live in their
/// own files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseConfig {
    pub course_id: String,
    pub title: String,
    pub term_start: NaiveDate,
    pub term_end: NaiveDate,
    #[serde(default)]
    pub milestones: Vec<Milestone>,
}

/// Saved filters and templates of one course.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDoc {
    pub schema_version: u32,
    pub filters: FilterStore,
    pub templates: TemplateStore,
}

impl StoreDoc {
    pub fn new() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            ..Self::default()
        }
    }
}

/// Everything stored for one course.
#[derive(Debug, Clone)]
pub struct CourseData {
    pub course: Course,
    pub roster: Roster,
    pub events: BTreeMap<Source, Vec<ActivityEvent>>,
    pub store: StoreDoc,
}

impl CourseData {
    pub fn all_events(&self) -> Vec<ActivityEvent> {
        self.events.values().flatten().cloned().collect()
    }
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    path.with_file_name(format!(".{name}.{}.{n}.tmp", std::process::id()))
}

fn sync_dir(dir: &Path) {
    // not every platform lets a directory be opened for syncing
    if let Ok(d) = fs::File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Replaces `path` with `bytes` via write-temp-then-rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path)(e));
    }
    if let Some(dir) = path.parent() {
        sync_dir(dir);
    }
    Ok(())
}

/// Where a simulated crash stops [`write_interrupted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Only the first `n` bytes reached the temporary file.
    PartialTemp(usize),
    /// The temporary file is complete but was never renamed.
    BeforeRename,
    /// The rename happened; the directory sync did not.
    AfterRename,
}

/// Runs [`write_atomic`] up to `crash` and abandons it there, leaving the
/// same debris a killed process would.
pub fn write_interrupted(path: &Path, bytes: &[u8], crash: CrashPoint) -> Result<(), PersistError> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        match crash {
            CrashPoint::PartialTemp(n) => {
                f.write_all(&bytes[..n.min(bytes.len())])?;
                Ok(())
            }
            CrashPoint::BeforeRename => f.write_all(bytes),
            CrashPoint::AfterRename => {
                f.write_all(bytes)?;
                fs::rename(&tmp, path)
            }
        }
    })();
    result.map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, PersistError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| PersistError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    let mut text = serde_json::to_string_pretty(value).expect("stored documents serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Reads a store document, checking its schema version.
pub fn read_store_doc(path: &Path) -> Result<StoreDoc, PersistError> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let text = read_text(path)?;
    let corrupt = |e: serde_json::Error| PersistError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let v: Version = serde_json::from_str(&text).map_err(corrupt)?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(PersistError::UnsupportedSchema {
            path: path.to_path_buf(),
            found: v.schema_version,
        });
    }
    serde_json::from_str(&text).map_err(corrupt)
}

/// Root directory holding one subdirectory per course.
#[derive(Debug, Clone)]
pub struct DataStore {
    root: PathBuf,
}

impl DataStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn course_dir(&self, course_id: &str) -> Result<PathBuf, PersistError> {
        if !is_valid_filter_name(course_id) {
            return Err(PersistError::InvalidCourseId(course_id.to_string()));
        }
        Ok(self.root.join(course_id))
    }

    fn existing_course_dir(&self, course_id: &str) -> Result<PathBuf, PersistError> {
        let dir = self.course_dir(course_id)?;
        if !dir.join(COURSE_FILE).is_file() {
            return Err(PersistError::CourseNotFound(course_id.to_string()));
        }
        Ok(dir)
    }

    pub fn store_path(&self, course_id: &str) -> Result<PathBuf, PersistError> {
        Ok(self.course_dir(course_id)?.join(STORE_FILE))
    }

    /// Ids of all stored courses, ascending.
    pub fn course_ids(&self) -> Result<Vec<String>, PersistError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if is_valid_filter_name(&name) && entry.path().join(COURSE_FILE).is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Registers a course from its config, roster CSV and teams document.
    /// Replacing an existing course keeps its events and saved store.
    pub fn create_course(
        &self,
        config: &CourseConfig,
        roster_csv: &str,
        teams_json: &str,
        replace: bool,
    ) -> Result<Course, PersistError> {
        let dir = self.course_dir(&config.course_id)?;
        if dir.join(COURSE_FILE).exists() && !replace {
            return Err(PersistError::CourseExists(config.course_id.clone()));
        }
        let (roster, teams) = load_roster(roster_csv, teams_json)?;
        let course = assemble(config.clone(), &roster, teams);
        course.validate()?;
        fs::create_dir_all(dir.join(EVENTS_DIR)).map_err(io_err(&dir))?;
        write_atomic(&dir.join(ROSTER_FILE), roster_csv.as_bytes())?;
        write_atomic(&dir.join(TEAMS_FILE), teams_json.as_bytes())?;
        if !dir.join(STORE_FILE).exists() {
            write_json(&dir.join(STORE_FILE), &StoreDoc::new())?;
        }
        // written last: its presence marks the course as complete
        write_json(&dir.join(COURSE_FILE), config)?;
        Ok(course)
    }

    pub fn load(&self, course_id: &str) -> Result<CourseData, PersistError> {
        let dir = self.existing_course_dir(course_id)?;
        let config: CourseConfig = read_json(&dir.join(COURSE_FILE))?;
        let roster_csv = read_text(&dir.join(ROSTER_FILE))?;
        let teams_json = read_text(&dir.join(TEAMS_FILE))?;
        let (roster, teams) = load_roster(&roster_csv, &teams_json)?;
        let course = assemble(config, &roster, teams);
        let mut events = BTreeMap::new();
        for source in Source::ALL {
            let path = events_path(&dir, source);
            if path.is_file() {
                events.insert(source, read_json(&path)?);
            }
        }
        let store = self.load_store(course_id)?;
        Ok(CourseData {
            course,
            roster,
            events,
            store,
        })
    }

    /// The course's saved filters and templates; empty if never saved.
    pub fn load_store(&self, course_id: &str) -> Result<StoreDoc, PersistError> {
        let path = self.existing_course_dir(course_id)?.join(STORE_FILE);
        if !path.exists() {
            return Ok(StoreDoc::new());
        }
        read_store_doc(&path)
    }

    pub fn save_store(&self, course_id: &str, doc: &StoreDoc) -> Result<(), PersistError> {
        let dir = self.existing_course_dir(course_id)?;
        write_json(&dir.join(STORE_FILE), doc)
    }

    /// Parses and resolves one source export, replacing the course's
    /// previous events from that source.
    pub fn ingest(
        &self,
        course_id: &str,
        source: Source,
        text: &str,
        rules: &IgnoreRules,
    ) -> Result<IngestReport, PersistError> {
        let dir = self.existing_course_dir(course_id)?;
        let roster = load_roster(&read_text(&dir.join(ROSTER_FILE))?, "[]")?.0;
        let batch = parse_source(source, text, rules)?;
        let (events, report) = resolve_events(&batch, &roster);
        fs::create_dir_all(dir.join(EVENTS_DIR)).map_err(io_err(&dir))?;
        write_json(&events_path(&dir, source), &events)?;
        Ok(report)
    }
}

fn events_path(dir: &Path, source: Source) -> PathBuf {
    dir.join(EVENTS_DIR).join(format!("{}.json", source.as_str()))
}

fn assemble(config: CourseConfig, roster: &Roster, teams: Vec<crate::model::Team>) -> Course {
    Course {
        course_id: config.course_id,
        title: config.title,
        term_start: config.term_start,
        term_end: config.term_end,
        milestones: config.milestones,
        roster: roster.students().to_vec(),
        teams,
    }
}
