//! Seeded synthetic classes with planted team behaviors.
//!
//! Activity is drawn per member, per day and per kind from a Poisson
//! distribution whose rate rises in the days before each milestone. After
//! drawing, a small set of floors makes each archetype's canonical filter
//! hold for every seed, not just on average (see [`Manifest`]).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::{Decimal, FilterExpr};
use crate::ingest::{render_git_numstat, render_roster_csv, render_ticket_csv, CommitLog, FileChange, ForumKind, RawForumRecord, RawTicketRecord};
use crate::model::{day_start, Milestone, StudentIdentity, Team, TicketOutcome, Timestamp};
use crate::persist::{write_atomic, CourseConfig, PersistError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("bad archetype mix: {0}")]
    BadMix(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Balanced,
    FreeRider,
    Silent,
    ForumOnly,
    OfficeHoursHeavy,
}

impl Archetype {
    pub const ALL: [Archetype; 5] = [
        Archetype::Balanced,
        Archetype::FreeRider,
        Archetype::Silent,
        Archetype::ForumOnly,
        Archetype::OfficeHoursHeavy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Balanced => "balanced",
            Archetype::FreeRider => "free_rider",
            Archetype::Silent => "silent",
            Archetype::ForumOnly => "forum_only",
            Archetype::OfficeHoursHeavy => "office_hours_heavy",
        }
    }

    /// Pairs whose canonical filters must never select each other's teams.
    pub const CONTRADICTORY: [(Archetype, Archetype); 4] = [
        (Archetype::Silent, Archetype::ForumOnly),
        (Archetype::Silent, Archetype::OfficeHoursHeavy),
        (Archetype::ForumOnly, Archetype::OfficeHoursHeavy),
        (Archetype::FreeRider, Archetype::Balanced),
    ];

    pub fn contradicts(self, other: Archetype) -> bool {
        Self::CONTRADICTORY
            .iter()
            .any(|&(a, b)| (a, b) == (self, other) || (b, a) == (self, other))
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str().replace('_', "") == key)
            .ok_or_else(|| SynthError::BadMix(format!("unknown archetype `{s}`")))
    }
}

/// Number of teams planted per archetype.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchetypeMix(pub BTreeMap<Archetype, usize>);

impl ArchetypeMix {
    /// 15% each Silent, FreeRider and ForumOnly, 10% OfficeHoursHeavy
    /// (rounded down), the rest Balanced. For 20 teams: 3/3/3/2/9.
    pub fn default_for(team_count: usize) -> Self {
        let pct = |p: usize| team_count * p / 100;
        let mut m = BTreeMap::new();
        m.insert(Archetype::Silent, pct(15));
        m.insert(Archetype::FreeRider, pct(15));
        m.insert(Archetype::ForumOnly, pct(15));
        m.insert(Archetype::OfficeHoursHeavy, pct(10));
        let planted: usize = m.values().sum();
        m.insert(Archetype::Balanced, team_count - planted);
        Self(m)
    }

    /// `silent=3,free_rider=3,...`; archetypes left out get 0, except
    /// Balanced, which takes whatever remains of `team_count`.
    pub fn parse(text: &str, team_count: usize) -> Result<Self, SynthError> {
        let mut m = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, n) = part
                .split_once('=')
                .ok_or_else(|| SynthError::BadMix(format!("expected name=count, got `{part}`")))?;
            let a: Archetype = name.trim().parse()?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| SynthError::BadMix(format!("bad count in `{part}`")))?;
            if m.insert(a, n).is_some() {
                return Err(SynthError::BadMix(format!("`{name}` given twice")));
            }
        }
        if !m.contains_key(&Archetype::Balanced) {
            let planted: usize = m.values().sum();
            let rest = team_count
                .checked_sub(planted)
                .ok_or_else(|| SynthError::BadMix(format!("{planted} planted teams exceed {team_count}")))?;
            m.insert(Archetype::Balanced, rest);
        }
        Ok(Self(m))
    }

    pub fn count(&self, a: Archetype) -> usize {
        self.0.get(&a).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

/// Per-member activity rates, in events per week outside milestone bursts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub commits: f64,
    pub additions_per_commit: f64,
    pub posts: f64,
    pub replies: f64,
    pub tickets: f64,
    /// Rate multiplier on the `burst_days` days up to and including a milestone.
    pub burst_factor: f64,
    pub burst_days: i64,
    /// Commit rate of a free rider relative to a teammate. At most 0.1.
    pub free_rider_factor: f64,
    /// Commit rate of Silent teams relative to Balanced ones.
    pub silent_commit_factor: f64,
    /// Ticket rate of OfficeHoursHeavy teams relative to Balanced ones. At least 3.
    pub office_hours_factor: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            commits: 3.0,
            additions_per_commit: 40.0,
            posts: 0.5,
            replies: 0.8,
            tickets: 0.35,
            burst_factor: 3.0,
            burst_days: 5,
            free_rider_factor: 0.05,
            silent_commit_factor: 0.25,
            office_hours_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub course_id: String,
    pub title: String,
    pub team_count: usize,
    pub members_per_team: usize,
    pub mix: ArchetypeMix,
    pub term_start: NaiveDate,
    pub term_end: NaiveDate,
    pub milestones: Vec<Milestone>,
    pub seed: u64,
    pub rates: Rates,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl SynthParams {
    /// A fall term with four project milestones, two members per team and
    /// the default mix.
    pub fn new(team_count: usize, seed: u64) -> Self {
        let milestone = |name: &str, d| Milestone {
            name: name.to_string(),
            date: d,
        };
        Self {
            course_id: "synth".into(),
            title: "Software Engineering Project (synthetic)".into(),
            team_count,
            members_per_team: 2,
            mix: ArchetypeMix::default_for(team_count),
            term_start: date(2020, 8, 17),
            term_end: date(2020, 11, 30),
            milestones: vec![
                milestone("Requirements", date(2020, 9, 14)),
                milestone("Design", date(2020, 10, 5)),
                milestone("Beta", date(2020, 10, 30)),
                milestone("Final", date(2020, 11, 23)),
            ],
            seed,
            rates: Rates::default(),
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.team_count == 0 || self.members_per_team == 0 {
            return Err(SynthError::BadParams("team and member counts must be at least 1".into()));
        }
        if self.mix.total() != self.team_count {
            return Err(SynthError::BadMix(format!(
                "mix covers {} teams but team_count is {}",
                self.mix.total(),
                self.team_count
            )));
        }
        if self.members_per_team > 20 {
            return Err(SynthError::BadParams("at most 20 members per team".into()));
        }
        if 2 * self.mix.count(Archetype::OfficeHoursHeavy) >= self.team_count {
            return Err(SynthError::BadMix(
                "office_hours_heavy teams must be fewer than half, or none can exceed twice the median".into(),
            ));
        }
        if self.mix.count(Archetype::FreeRider) > 0 && self.members_per_team < 2 {
            return Err(SynthError::BadMix("free riders need teams of at least 2".into()));
        }
        if self.term_start >= self.term_end {
            return Err(SynthError::BadParams("term must end after it starts".into()));
        }
        if self.milestones.iter().any(|m| m.date < self.term_start || m.date > self.term_end) {
            return Err(SynthError::BadParams("milestones must fall within the term".into()));
        }
        let r = &self.rates;
        let rates = [r.commits, r.additions_per_commit, r.posts, r.replies, r.tickets, r.burst_factor];
        if rates.iter().any(|v| !v.is_finite() || *v < 0.0) || r.burst_days < 0 {
            return Err(SynthError::BadParams("rates must be finite and non-negative".into()));
        }
        if !(0.0..=0.1).contains(&r.free_rider_factor) {
            return Err(SynthError::BadParams("free_rider_factor must be within [0, 0.1]".into()));
        }
        if r.office_hours_factor.is_nan() || r.office_hours_factor < 3.0 || !(0.0..=1.0).contains(&r.silent_commit_factor) {
            return Err(SynthError::BadParams(
                "office_hours_factor must be at least 3 and silent_commit_factor within [0, 1]".into(),
            ));
        }
        Ok(())
    }

    fn term_days(&self) -> Vec<NaiveDate> {
        self.term_start.iter_days().take_while(|d| *d <= self.term_end).collect()
    }

    fn burst_multiplier(&self, day: NaiveDate) -> f64 {
        let bursting = self.milestones.iter().any(|m| {
            let lead = (m.date - day).num_days();
            (0..self.rates.burst_days).contains(&lead)
        });
        if bursting {
            self.rates.burst_factor
        } else {
            1.0
        }
    }

    /// Expected commits of one Balanced member over the whole term.
    pub fn expected_member_commits(&self) -> f64 {
        self.term_days()
            .iter()
            .map(|d| self.rates.commits / 7.0 * self.burst_multiplier(*d))
            .sum()
    }

    /// `X` in the FreeRider/Balanced normdiff filters: 0.8 for pairs,
    /// `0.8 / (m - 1)` rounded down to 2 places for larger teams.
    pub fn normdiff_threshold(&self) -> Decimal {
        let m = self.members_per_team.max(2) as i64;
        Decimal::new(80 / (m - 1), 2).expect("scale 2")
    }

    /// `N` in the struggling-team filter: half the expected commits of a
    /// Balanced team over the term, rounded down.
    pub fn struggling_threshold(&self) -> u64 {
        (0.5 * self.expected_member_commits() * self.members_per_team as f64).floor() as u64
    }

    pub fn canonical_filters(&self) -> BTreeMap<Archetype, String> {
        let x = self.normdiff_threshold();
        let mut m = BTreeMap::new();
        m.insert(Archetype::Silent, "posts.total == 0 and replies.total == 0 and tickets.total == 0".to_string());
        m.insert(Archetype::FreeRider, format!("commits.normdiff >= {x}"));
        m.insert(Archetype::ForumOnly, "posts.total >= 1 and tickets.total == 0".to_string());
        m.insert(Archetype::OfficeHoursHeavy, "tickets.total > course.median.total.tickets * 2".to_string());
        m.insert(
            Archetype::Balanced,
            format!("commits.normdiff < {x} and tickets.total >= 1 and posts.total >= 1"),
        );
        m
    }

    pub fn struggling_filter(&self) -> String {
        format!(
            "commits.total < {} and posts.total == 0 and tickets.total == 0",
            self.struggling_threshold()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTeam {
    pub team_id: String,
    pub archetype: Archetype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_rider: Option<String>,
}

/// Ground truth for a generated class.
///
/// Floors applied after drawing, so the canonical filters hold for any seed:
/// every non-Silent team has at least one post; Balanced, FreeRider and
/// OfficeHoursHeavy teams have at least one ticket; a free rider commits at
/// most a tenth of each teammate's commits (teammates have at least 10);
/// Balanced members commit at least two thirds of their busiest teammate;
/// OfficeHoursHeavy teams exceed twice the median team ticket total; Silent
/// teams stay under the struggling threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub course_id: String,
    pub team_count: usize,
    pub members_per_team: usize,
    pub teams: Vec<PlantedTeam>,
    pub canonical_filters: BTreeMap<Archetype, String>,
    pub struggling_filter: String,
    /// The teams the struggling filter is meant to return.
    pub struggling_teams: Vec<String>,
    pub contradictory_pairs: Vec<(Archetype, Archetype)>,
    /// Patterns that exclude the starter code from additions.
    pub ignore_patterns: Vec<String>,
    pub rates: Rates,
}

impl Manifest {
    pub fn teams_of(&self, a: Archetype) -> Vec<&str> {
        self.teams
            .iter()
            .filter(|t| t.archetype == a)
            .map(|t| t.team_id.as_str())
            .collect()
    }

    pub fn archetype_of(&self, team_id: &str) -> Option<Archetype> {
        self.teams.iter().find(|t| t.team_id == team_id).map(|t| t.archetype)
    }

    pub fn canonical_filter(&self, a: Archetype) -> FilterExpr {
        crate::filters::parse_filter(&self.canonical_filters[&a]).expect("canonical filters parse")
    }
}

pub const COURSE_FILE: &str = "course.json";
pub const ROSTER_FILE: &str = "roster.csv";
pub const TEAMS_FILE: &str = "teams.json";
pub const FORUM_FILE: &str = "forum.json";
pub const TICKETS_FILE: &str = "tickets.csv";
pub const GIT_FILE: &str = "git.log";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Generated exports, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub config: CourseConfig,
    pub manifest: Manifest,
    pub files: BTreeMap<&'static str, String>,
}

impl SynthOutput {
    pub fn file(&self, name: &str) -> &str {
        &self.files[name]
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), PersistError> {
        std::fs::create_dir_all(dir).map_err(|source| PersistError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, text) in &self.files {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        Ok(())
    }
}

const FIRST: [&str; 24] = [
    "Ada", "Ben", "Chloe", "Dev", "Elena", "Farid", "Grace", "Hiro", "Ines", "Jonah", "Kira", "Luis", "Maya",
    "Nikhil", "Olga", "Priya", "Quinn", "Rosa", "Sam", "Tariq", "Uma", "Victor", "Wen", "Yusuf",
];
const LAST: [&str; 20] = [
    "Abbott", "Baker", "Chen", "Diallo", "Evans", "Fischer", "Garcia", "Haddad", "Ito", "Jensen", "Kowalski",
    "Lopez", "Mensah", "Novak", "Okafor", "Patel", "Rossi", "Silva", "Tanaka", "Walsh",
];
const SOURCE_FILES: [&str; 8] = [
    "src/app/Main.java",
    "src/app/Board.java",
    "src/app/Player.java",
    "src/app/Rules.java",
    "src/ui/View.java",
    "src/ui/Controls.java",
    "test/app/BoardTest.java",
    "README.md",
];
const STARTER_FILES: [(&str, u64); 3] = [("lib/gui/Canvas.java", 820), ("lib/gui/Sprites.java", 410), ("lib/util/Io.java", 150)];
const STARTER_PATTERN: &str = "^lib/";

#[derive(Default)]
struct MemberActivity {
    commits: Vec<Timestamp>,
    posts: Vec<Timestamp>,
    replies: Vec<Timestamp>,
    tickets: Vec<Timestamp>,
}

struct Gen<'a> {
    p: &'a SynthParams,
    rng: ChaCha8Rng,
    days: Vec<NaiveDate>,
}

impl Gen<'_> {
    fn draw(&mut self, weekly: f64, factor: f64) -> Vec<Timestamp> {
        let mut out = Vec::new();
        for i in 0..self.days.len() {
            let day = self.days[i];
            let lambda = weekly / 7.0 * factor * self.p.burst_multiplier(day);
            if lambda <= 0.0 {
                continue;
            }
            let n = Poisson::new(lambda).expect("positive rate").sample(&mut self.rng) as u64;
            for _ in 0..n {
                out.push(self.time_on(day));
            }
        }
        out.sort();
        out
    }

    fn time_on(&mut self, day: NaiveDate) -> Timestamp {
        day_start(day) + Duration::seconds(self.rng.random_range(0..86_400))
    }

    fn random_time(&mut self) -> Timestamp {
        let i = self.rng.random_range(0..self.days.len());
        let day = self.days[i];
        self.time_on(day)
    }

    fn add_random(&mut self, list: &mut Vec<Timestamp>, n: usize) {
        for _ in 0..n {
            let t = self.random_time();
            list.push(t);
        }
        list.sort();
    }

    fn drop_random(&mut self, list: &mut Vec<Timestamp>, keep: usize) {
        while list.len() > keep {
            let i = self.rng.random_range(0..list.len());
            list.remove(i);
        }
    }

    fn hex_sha(&mut self) -> String {
        (0..20).map(|_| format!("{:02x}", self.rng.random::<u8>())).collect()
    }
}

fn team_total(members: &[MemberActivity], f: impl Fn(&MemberActivity) -> usize) -> usize {
    members.iter().map(f).sum()
}

/// Generates a class. Identical parameters give identical bytes.
pub fn generate(params: &SynthParams) -> Result<SynthOutput, SynthError> {
    params.validate()?;
    let p = params;
    let mut g = Gen {
        p,
        rng: ChaCha8Rng::seed_from_u64(p.seed),
        days: p.term_days(),
    };
    let r = p.rates.clone();

    let mut archetypes: Vec<Archetype> = Archetype::ALL
        .iter()
        .flat_map(|a| std::iter::repeat_n(*a, p.mix.count(*a)))
        .collect();
    archetypes.shuffle(&mut g.rng);

    // identities
    let mut roster = Vec::new();
    let mut teams = Vec::new();
    let width = p.team_count.to_string().len().max(2);
    for (ti, _) in archetypes.iter().enumerate() {
        let team_id = format!("team{:0width$}", ti + 1);
        let mut member_ids = Vec::new();
        for mi in 0..p.members_per_team {
            let n = ti * p.members_per_team + mi + 1;
            let id = format!("stu{n:04}");
            let first = FIRST[g.rng.random_range(0..FIRST.len())];
            let last = LAST[g.rng.random_range(0..LAST.len())];
            let email = format!("{}.{}{n}@students.example.edu", first.to_lowercase(), last.to_lowercase());
            let student = StudentIdentity::new(&id, format!("{first} {last}"), email)
                .expect("generated identity is valid")
                .with_forum_handle(format!("forum_{id}"))
                .with_ticket_handle(format!("tix_{id}"))
                .with_git_email(&format!("{id}@dev.example.org"));
            roster.push(student);
            member_ids.push(id);
        }
        teams.push(Team {
            team_id: team_id.clone(),
            name: format!("Team {:0width$}", ti + 1),
            member_ids,
            repo_url: Some(format!("https://github.com/example-course/{}-{team_id}", p.course_id)),
        });
    }

    // activity
    let mut activity: Vec<Vec<MemberActivity>> = Vec::new();
    let mut planted = Vec::new();
    for (ti, &arch) in archetypes.iter().enumerate() {
        let free_rider = (arch == Archetype::FreeRider).then(|| g.rng.random_range(0..p.members_per_team));
        let mut members = Vec::new();
        for mi in 0..p.members_per_team {
            let commit_factor = match arch {
                Archetype::Silent => r.silent_commit_factor,
                Archetype::FreeRider if free_rider == Some(mi) => r.free_rider_factor,
                _ => 1.0,
            };
            let (forum_factor, ticket_factor) = match arch {
                Archetype::Silent => (0.0, 0.0),
                Archetype::ForumOnly => (1.0, 0.0),
                Archetype::OfficeHoursHeavy => (1.0, r.office_hours_factor),
                _ => (1.0, 1.0),
            };
            members.push(MemberActivity {
                commits: g.draw(r.commits, commit_factor),
                posts: g.draw(r.posts, forum_factor),
                replies: g.draw(r.replies, forum_factor),
                tickets: g.draw(r.tickets, ticket_factor),
            });
        }
        apply_floors(&mut g, arch, free_rider, &mut members);
        planted.push(PlantedTeam {
            team_id: teams[ti].team_id.clone(),
            archetype: arch,
            free_rider: free_rider.map(|i| teams[ti].member_ids[i].clone()),
        });
        activity.push(members);
    }
    lift_office_hours(&mut g, &archetypes, &mut activity);
    let struggling_n = p.struggling_threshold() as usize;
    for (members, &arch) in activity.iter_mut().zip(&archetypes) {
        if arch == Archetype::Silent {
            while team_total(members, |m| m.commits.len()) >= struggling_n.max(1) {
                let busiest = (0..members.len()).max_by_key(|&i| members[i].commits.len()).unwrap();
                let keep = members[busiest].commits.len() - 1;
                g.drop_random(&mut members[busiest].commits, keep);
            }
        }
    }

    // exports
    let mut forum = Vec::new();
    let mut tickets = Vec::new();
    let mut commits = Vec::new();
    let outcomes = TicketOutcome::ALL;
    for (ti, members) in activity.iter().enumerate() {
        let team = &teams[ti];
        let mut threads: Vec<String> = Vec::new();
        for (mi, m) in members.iter().enumerate() {
            let id = &team.member_ids[mi];
            for &at in &m.posts {
                let post_id = format!("p{:06}", forum.len() + 1);
                threads.push(post_id.clone());
                forum.push(RawForumRecord {
                    thread_id: post_id.clone(),
                    post_id,
                    author_handle: format!("forum_{id}"),
                    created_at: at,
                    kind: ForumKind::Initial,
                });
            }
            for &at in &m.replies {
                let thread_id = match threads.is_empty() {
                    true => format!("t-ext{:04}", g.rng.random_range(0..500)),
                    false => threads[g.rng.random_range(0..threads.len())].clone(),
                };
                forum.push(RawForumRecord {
                    post_id: format!("p{:06}", forum.len() + 1),
                    thread_id,
                    author_handle: format!("forum_{id}"),
                    created_at: at,
                    kind: ForumKind::Reply,
                });
            }
            for &at in &m.tickets {
                let outcome = outcomes[g.rng.random_range(0..outcomes.len())];
                tickets.push(RawTicketRecord {
                    ticket_id: format!("k{:06}", tickets.len() + 1),
                    student_handle: format!("tix_{id}"),
                    created_at: at,
                    outcome,
                });
            }
        }
        let busiest = (0..members.len()).max_by_key(|&i| (members[i].commits.len(), std::cmp::Reverse(i)));
        for (mi, m) in members.iter().enumerate() {
            let id = &team.member_ids[mi];
            for (ci, &at) in m.commits.iter().enumerate() {
                let mut author = format!("{id}@dev.example.org");
                if g.rng.random_bool(0.1) {
                    author = author.to_uppercase();
                }
                let additions = 1 + Poisson::new(r.additions_per_commit.max(1e-9)).unwrap().sample(&mut g.rng) as u64;
                let mut files = split_changes(&mut g, additions);
                if Some(mi) == busiest && ci == 0 {
                    for (path, lines) in STARTER_FILES {
                        files.push(FileChange {
                            additions: Some(lines),
                            deletions: Some(0),
                            path: path.to_string(),
                        });
                    }
                    files.push(FileChange {
                        additions: None,
                        deletions: None,
                        path: "assets/board.png".into(),
                    });
                }
                commits.push(CommitLog {
                    sha: g.hex_sha(),
                    author_email: author,
                    at,
                    files,
                });
            }
        }
    }
    forum.sort_by(|a, b| (a.created_at, &a.post_id).cmp(&(b.created_at, &b.post_id)));
    tickets.sort_by(|a, b| (a.created_at, &a.ticket_id).cmp(&(b.created_at, &b.ticket_id)));
    // newest first, as `git log` prints
    commits.sort_by(|a, b| (b.at, &b.sha).cmp(&(a.at, &a.sha)));

    let struggling_teams = planted
        .iter()
        .filter(|t| t.archetype == Archetype::Silent)
        .map(|t| t.team_id.clone())
        .collect();
    let manifest = Manifest {
        seed: p.seed,
        course_id: p.course_id.clone(),
        team_count: p.team_count,
        members_per_team: p.members_per_team,
        teams: planted,
        canonical_filters: p.canonical_filters(),
        struggling_filter: p.struggling_filter(),
        struggling_teams,
        contradictory_pairs: Archetype::CONTRADICTORY.to_vec(),
        ignore_patterns: vec![STARTER_PATTERN.to_string()],
        rates: p.rates.clone(),
    };
    let config = CourseConfig {
        course_id: p.course_id.clone(),
        title: p.title.clone(),
        term_start: p.term_start,
        term_end: p.term_end,
        milestones: p.milestones.clone(),
    };

    let mut files = BTreeMap::new();
    files.insert(COURSE_FILE, pretty(&config));
    files.insert(ROSTER_FILE, render_roster_csv(&roster));
    files.insert(TEAMS_FILE, pretty(&teams));
    files.insert(FORUM_FILE, pretty(&forum));
    files.insert(TICKETS_FILE, render_ticket_csv(&tickets));
    files.insert(GIT_FILE, render_git_numstat(&commits));
    files.insert(MANIFEST_FILE, pretty(&manifest));
    Ok(SynthOutput { config, manifest, files })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("generated documents serialize");
    s.push('\n');
    s
}

fn split_changes(g: &mut Gen<'_>, additions: u64) -> Vec<FileChange> {
    let n_files = g.rng.random_range(1..=3usize).min(additions as usize);
    let mut paths: Vec<&str> = SOURCE_FILES.to_vec();
    paths.shuffle(&mut g.rng);
    let mut left = additions;
    let mut out = Vec::new();
    for (i, path) in paths.into_iter().take(n_files).enumerate() {
        let take = if i + 1 == n_files { left } else { g.rng.random_range(1..=left - (n_files - i - 1) as u64) };
        left -= take;
        out.push(FileChange {
            additions: Some(take),
            deletions: Some(g.rng.random_range(0..=take / 2)),
            path: path.to_string(),
        });
    }
    out
}

fn apply_floors(g: &mut Gen<'_>, arch: Archetype, free_rider: Option<usize>, members: &mut [MemberActivity]) {
    let m = members.len();
    if arch != Archetype::Silent && team_total(members, |x| x.posts.len()) == 0 {
        let who = g.rng.random_range(0..m);
        g.add_random(&mut members[who].posts, 1);
    }
    let needs_ticket = matches!(arch, Archetype::Balanced | Archetype::FreeRider | Archetype::OfficeHoursHeavy);
    if needs_ticket && team_total(members, |x| x.tickets.len()) == 0 {
        let who = g.rng.random_range(0..m);
        g.add_random(&mut members[who].tickets, 1);
    }
    if let Some(fr) = free_rider {
        for i in (0..m).filter(|&i| i != fr) {
            let short = 10usize.saturating_sub(members[i].commits.len());
            g.add_random(&mut members[i].commits, short);
        }
        let others_min = (0..m).filter(|&i| i != fr).map(|i| members[i].commits.len()).min().unwrap_or(0);
        g.drop_random(&mut members[fr].commits, others_min / 10);
    }
    if arch == Archetype::Balanced {
        let max = members.iter().map(|x| x.commits.len()).max().unwrap_or(0);
        for member in members.iter_mut() {
            let short = (2 * max).div_ceil(3).saturating_sub(member.commits.len());
            g.add_random(&mut member.commits, short);
        }
    }
}

/// Tops up OfficeHoursHeavy teams until each has more than twice the median
/// team ticket total.
fn lift_office_hours(g: &mut Gen<'_>, archetypes: &[Archetype], activity: &mut [Vec<MemberActivity>]) {
    loop {
        let totals: Vec<u64> = activity
            .iter()
            .map(|t| team_total(t, |m| m.tickets.len()) as u64)
            .collect();
        let mut sorted = totals.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        // twice the median, kept in integers
        let twice_median = if n % 2 == 1 { 2 * sorted[n / 2] } else { sorted[n / 2 - 1] + sorted[n / 2] };
        let mut changed = false;
        for (ti, arch) in archetypes.iter().enumerate() {
            if *arch == Archetype::OfficeHoursHeavy && totals[ti] <= twice_median {
                let who = g.rng.random_range(0..activity[ti].len());
                let short = (twice_median + 1 - totals[ti]) as usize;
                g.add_random(&mut activity[ti][who].tickets, short);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}
