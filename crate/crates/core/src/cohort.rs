//! Student cohorts: the record types, CSV interchange, synthetic generation
//! with plantable per-major biases, and stratified splitting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::sigmoid;
use crate::rng::{self, tag};

/// Number of graded semesters per student.
pub const NUM_SEMESTERS: usize = 6;

pub const DEMOGRAPHICS_FILE: &str = "demographics.csv";
pub const ACADEMICS_FILE: &str = "academics.csv";
pub const EMPLOYMENT_FILE: &str = "employment.csv";

const DEMOGRAPHICS_HEADER: [&str; 6] = [
    "student_id",
    "major_id",
    "gender",
    "nation",
    "hometown_level",
    "enroll_status",
];
const ACADEMICS_HEADER: [&str; 5] = ["student_id", "semester", "course_id", "score", "credit"];
const EMPLOYMENT_HEADER: [&str; 2] = ["student_id", "label"];

/// The four binary demographic aspects tested for bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Gender,
    /// 1 = ethnic minority.
    Nation,
    /// 1 = city, 0 = county.
    HometownLevel,
    /// 1 = passed the entrance examination at the first attempt.
    EnrollStatus,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [
        Aspect::Gender,
        Aspect::Nation,
        Aspect::HometownLevel,
        Aspect::EnrollStatus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Gender => "gender",
            Aspect::Nation => "nation",
            Aspect::HometownLevel => "hometown_level",
            Aspect::EnrollStatus => "enroll_status",
        }
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aspect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Aspect::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown aspect `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub student_id: String,
    pub major_id: u32,
    pub gender: u8,
    pub nation: u8,
    pub hometown_level: u8,
    pub enroll_status: u8,
    /// 1 = employed.
    pub label: u8,
}

impl StudentRecord {
    pub fn aspect(&self, aspect: Aspect) -> u8 {
        match aspect {
            Aspect::Gender => self.gender,
            Aspect::Nation => self.nation,
            Aspect::HometownLevel => self.hometown_level,
            Aspect::EnrollStatus => self.enroll_status,
        }
    }

    /// Demographic indicator vector in [`Aspect::ALL`] order.
    pub fn demographics(&self) -> [f64; 4] {
        Aspect::ALL.map(|a| f64::from(self.aspect(a)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub student_id: String,
    pub semester: u8,
    pub course_id: String,
    pub score: f64,
    pub credit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum Provenance {
    Parsed,
    Synthetic { seed: u64 },
    Subset { parent_seed: Option<u64>, split_seed: u64, part: String },
}

impl Provenance {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Provenance::Parsed => None,
            Provenance::Synthetic { seed } => Some(*seed),
            Provenance::Subset { parent_seed, .. } => *parent_seed,
        }
    }
}

/// A validated set of students with their grades and outcomes.
///
/// `num_majors` is the size of the major id space `1..=num_majors`. A subset
/// produced by [`stratified_split`] keeps its parent's value even if some
/// majors end up empty on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub students: Vec<StudentRecord>,
    pub grades: Vec<GradeRecord>,
    pub num_majors: usize,
    pub metadata: Provenance,
}

fn check_binary(value: u8, what: &str, id: &str) -> Result<()> {
    if value > 1 {
        return Err(Error::Invalid(format!("student `{id}`: {what} must be 0 or 1, got {value}")));
    }
    Ok(())
}

impl Cohort {
    /// Validates and assembles a cohort. `num_majors` is taken as the number
    /// of distinct major ids, which must then cover exactly `1..=M`.
    pub fn new(students: Vec<StudentRecord>, grades: Vec<GradeRecord>, metadata: Provenance) -> Result<Self> {
        let majors: BTreeSet<u32> = students.iter().map(|s| s.major_id).collect();
        let num_majors = majors.len();
        if let Some(bad) = majors.iter().find(|&&m| m == 0 || m as usize > num_majors) {
            return Err(Error::Invalid(format!(
                "major ids must be 1..={num_majors} (one per distinct major); found {bad}"
            )));
        }
        let cohort = Cohort {
            students,
            grades,
            num_majors,
            metadata,
        };
        cohort.validate()?;
        Ok(cohort)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::with_capacity(self.students.len());
        for s in &self.students {
            if !ids.insert(s.student_id.as_str()) {
                return Err(Error::Invalid(format!("duplicate student id `{}`", s.student_id)));
            }
            if s.major_id == 0 || s.major_id as usize > self.num_majors {
                return Err(Error::Invalid(format!(
                    "student `{}`: major {} outside 1..={}",
                    s.student_id, s.major_id, self.num_majors
                )));
            }
            for a in Aspect::ALL {
                check_binary(s.aspect(a), a.name(), &s.student_id)?;
            }
            check_binary(s.label, "label", &s.student_id)?;
        }
        for g in &self.grades {
            if !ids.contains(g.student_id.as_str()) {
                return Err(Error::UnknownStudent {
                    file: ACADEMICS_FILE.into(),
                    student_id: g.student_id.clone(),
                });
            }
            if !(1..=NUM_SEMESTERS as u8).contains(&g.semester) {
                return Err(Error::Invalid(format!("semester {} outside 1..={NUM_SEMESTERS}", g.semester)));
            }
            if !(0.0..=100.0).contains(&g.score) {
                return Err(Error::Invalid(format!("score {} outside [0, 100]", g.score)));
            }
            if !(g.credit.is_finite() && g.credit >= 0.0) {
                return Err(Error::Invalid(format!("credit {} must be a non-negative number", g.credit)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    /// Counts of (label 0, label 1).
    pub fn label_counts(&self) -> [usize; 2] {
        let ones = self.students.iter().filter(|s| s.label == 1).count();
        [self.students.len() - ones, ones]
    }

    /// Distinct major ids that have at least one student, ascending.
    pub fn majors_present(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.students.iter().map(|s| s.major_id).collect();
        set.into_iter().collect()
    }

    pub fn student_index(&self) -> HashMap<&str, usize> {
        self.students
            .iter()
            .enumerate()
            .map(|(i, s)| (s.student_id.as_str(), i))
            .collect()
    }

    /// The cohort restricted to the students at `indices` (kept in the given
    /// order), with their grades.
    pub fn subset(&self, indices: &[usize], metadata: Provenance) -> Cohort {
        let students: Vec<StudentRecord> = indices.iter().map(|&i| self.students[i].clone()).collect();
        let keep: HashSet<&str> = students.iter().map(|s| s.student_id.as_str()).collect();
        let grades = self
            .grades
            .iter()
            .filter(|g| keep.contains(g.student_id.as_str()))
            .cloned()
            .collect();
        Cohort {
            students,
            grades,
            num_majors: self.num_majors,
            metadata,
        }
    }

    /// Writes the three interchange CSVs into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut w = csv_writer(&dir.join(DEMOGRAPHICS_FILE))?;
        w.write_record(DEMOGRAPHICS_HEADER)?;
        for s in &self.students {
            w.write_record([
                s.student_id.clone(),
                s.major_id.to_string(),
                s.gender.to_string(),
                s.nation.to_string(),
                s.hometown_level.to_string(),
                s.enroll_status.to_string(),
            ])?;
        }
        flush(w, &dir.join(DEMOGRAPHICS_FILE))?;

        let mut w = csv_writer(&dir.join(ACADEMICS_FILE))?;
        w.write_record(ACADEMICS_HEADER)?;
        for g in &self.grades {
            w.write_record([
                g.student_id.clone(),
                g.semester.to_string(),
                g.course_id.clone(),
                g.score.to_string(),
                g.credit.to_string(),
            ])?;
        }
        flush(w, &dir.join(ACADEMICS_FILE))?;

        let mut w = csv_writer(&dir.join(EMPLOYMENT_FILE))?;
        w.write_record(EMPLOYMENT_HEADER)?;
        for s in &self.students {
            w.write_record([s.student_id.clone(), s.label.to_string()])?;
        }
        flush(w, &dir.join(EMPLOYMENT_FILE))
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn flush(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV file, checks its header and hands each record (with its
/// 1-based line number) to `row`.
fn read_csv<F>(path: &Path, header: &[&str], mut row: F) -> Result<()>
where
    F: FnMut(&csv::StringRecord, usize) -> Result<()>,
{
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let found = rdr.headers()?.clone();
    if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(Error::Schema {
            file: file_name,
            row: 1,
            column: "<header>".into(),
            message: format!("expected `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Schema {
            file: file_name.clone(),
            row: line,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        row(&rec, line)?;
    }
    Ok(())
}

struct Fields<'a> {
    file: &'static str,
    header: &'a [&'a str],
    rec: &'a csv::StringRecord,
    line: usize,
}

impl Fields<'_> {
    fn get<T: FromStr>(&self, col: usize) -> Result<T> {
        let raw = self.rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| Error::Schema {
            file: self.file.into(),
            row: self.line,
            column: self.header[col].into(),
            message: format!("cannot parse `{raw}`"),
        })
    }

    fn binary(&self, col: usize) -> Result<u8> {
        let v: u8 = self.get(col)?;
        if v > 1 {
            return Err(Error::Schema {
                file: self.file.into(),
                row: self.line,
                column: self.header[col].into(),
                message: format!("expected 0 or 1, got {v}"),
            });
        }
        Ok(v)
    }

    fn range_err(&self, col: usize, message: String) -> Error {
        Error::Schema {
            file: self.file.into(),
            row: self.line,
            column: self.header[col].into(),
            message,
        }
    }
}

/// Reads the three interchange files and joins them on `student_id`.
pub fn parse_cohort(demographics: &Path, academics: &Path, employment: &Path) -> Result<Cohort> {
    let mut students = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    read_csv(demographics, &DEMOGRAPHICS_HEADER, |rec, line| {
        let f = Fields {
            file: DEMOGRAPHICS_FILE,
            header: &DEMOGRAPHICS_HEADER,
            rec,
            line,
        };
        let id: String = f.get(0)?;
        let major_id: u32 = f.get(1)?;
        if major_id == 0 {
            return Err(f.range_err(1, "major ids start at 1".into()));
        }
        if index.insert(id.clone(), students.len()).is_some() {
            return Err(f.range_err(0, format!("duplicate student id `{id}`")));
        }
        students.push(StudentRecord {
            student_id: id,
            major_id,
            gender: f.binary(2)?,
            nation: f.binary(3)?,
            hometown_level: f.binary(4)?,
            enroll_status: f.binary(5)?,
            label: 0,
        });
        Ok(())
    })?;

    let mut grades = Vec::new();
    read_csv(academics, &ACADEMICS_HEADER, |rec, line| {
        let f = Fields {
            file: ACADEMICS_FILE,
            header: &ACADEMICS_HEADER,
            rec,
            line,
        };
        let student_id: String = f.get(0)?;
        if !index.contains_key(&student_id) {
            return Err(Error::UnknownStudent {
                file: ACADEMICS_FILE.into(),
                student_id,
            });
        }
        let semester: u8 = f.get(1)?;
        if !(1..=NUM_SEMESTERS as u8).contains(&semester) {
            return Err(f.range_err(1, format!("semester {semester} outside 1..={NUM_SEMESTERS}")));
        }
        let score: f64 = f.get(3)?;
        if !(0.0..=100.0).contains(&score) {
            return Err(f.range_err(3, format!("score {score} outside [0, 100]")));
        }
        let credit: f64 = f.get(4)?;
        if !(credit.is_finite() && credit >= 0.0) {
            return Err(f.range_err(4, format!("credit {credit} must be non-negative")));
        }
        grades.push(GradeRecord {
            student_id,
            semester,
            course_id: f.get(2)?,
            score,
            credit,
        });
        Ok(())
    })?;

    let mut seen = vec![false; students.len()];
    read_csv(employment, &EMPLOYMENT_HEADER, |rec, line| {
        let f = Fields {
            file: EMPLOYMENT_FILE,
            header: &EMPLOYMENT_HEADER,
            rec,
            line,
        };
        let student_id: String = f.get(0)?;
        let Some(&i) = index.get(&student_id) else {
            return Err(Error::UnknownStudent {
                file: EMPLOYMENT_FILE.into(),
                student_id,
            });
        };
        if seen[i] {
            return Err(f.range_err(0, format!("duplicate label for `{student_id}`")));
        }
        seen[i] = true;
        students[i].label = f.binary(1)?;
        Ok(())
    })?;
    if let Some(i) = seen.iter().position(|&s| !s) {
        return Err(Error::MissingStudent {
            file: EMPLOYMENT_FILE.into(),
            student_id: students[i].student_id.clone(),
        });
    }

    Cohort::new(students, grades, Provenance::Parsed)
}

/// Reads `demographics.csv`, `academics.csv` and `employment.csv` from `dir`.
pub fn parse_cohort_dir(dir: &Path) -> Result<Cohort> {
    parse_cohort(
        &dir.join(DEMOGRAPHICS_FILE),
        &dir.join(ACADEMICS_FILE),
        &dir.join(EMPLOYMENT_FILE),
    )
}

/// A log-odds shift on employment for students of `major_id` whose `aspect`
/// indicator is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBias {
    pub major_id: u32,
    pub aspect: Aspect,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_students: usize,
    pub num_majors: usize,
    pub num_colleges: usize,
    /// College-specific courses offered each semester.
    pub courses_per_semester: usize,
    /// Courses every student may take each semester.
    pub core_courses_per_semester: usize,
    /// Probability that a student takes a course offered to them.
    pub enrollment_density: f64,
    /// Target marginal employment rate.
    pub base_employment_rate: f64,
    /// P(indicator = 1) per aspect, in [`Aspect::ALL`] order.
    pub aspect_prevalence: [f64; 4],
    /// Log-odds of employment per standard deviation of final-year ability.
    pub academic_effect: f64,
    /// 0 makes every semester equally informative about final ability;
    /// 1 makes the first semester nearly uninformative.
    pub ability_drift: f64,
    /// Standard deviation of per-grade noise, in score points.
    pub grade_noise: f64,
    pub planted_bias_spec: Vec<PlantedBias>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_students: 2133,
            num_majors: 64,
            num_colleges: 13,
            courses_per_semester: 6,
            core_courses_per_semester: 4,
            enrollment_density: 0.85,
            base_employment_rate: 0.85,
            aspect_prevalence: [0.5, 0.15, 0.4, 0.75],
            academic_effect: 1.5,
            ability_drift: 0.8,
            grade_noise: 6.0,
            planted_bias_spec: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if self.num_students == 0 || self.num_majors == 0 {
            return Err(Error::Config("need at least one student and one major".into()));
        }
        if self.num_colleges == 0 || self.num_colleges > self.num_majors {
            return Err(Error::Config(format!(
                "num_colleges must be in 1..={} (one college hosts at least one major)",
                self.num_majors
            )));
        }
        if self.courses_per_semester + self.core_courses_per_semester == 0 {
            return Err(Error::Config("no courses offered".into()));
        }
        if !(self.enrollment_density > 0.0 && self.enrollment_density <= 1.0) {
            return Err(Error::Config("enrollment_density must be in (0, 1]".into()));
        }
        if !open_unit(self.base_employment_rate) {
            return Err(Error::Config("base_employment_rate must be in (0, 1)".into()));
        }
        if !self.aspect_prevalence.iter().all(|&p| open_unit(p)) {
            return Err(Error::Config("aspect_prevalence entries must be in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.ability_drift) {
            return Err(Error::Config("ability_drift must be in [0, 1]".into()));
        }
        if !(self.academic_effect.is_finite() && self.grade_noise.is_finite() && self.grade_noise >= 0.0) {
            return Err(Error::Config("academic_effect and grade_noise must be finite".into()));
        }
        for b in &self.planted_bias_spec {
            if b.major_id == 0 || b.major_id as usize > self.num_majors {
                return Err(Error::Config(format!("planted bias on unknown major {}", b.major_id)));
            }
            if !b.effect.is_finite() {
                return Err(Error::Config("planted bias effect must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Intercept `b` such that the mean of `sigmoid(b + s_i)` equals `rate`.
fn calibrate_intercept(scores: &[f64], rate: f64) -> f64 {
    let mean_at = |b: f64| scores.iter().map(|s| sigmoid(b + s)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates a synthetic cohort.
///
/// Each student has an early and a late latent ability; semester `s` grades
/// reflect a blend that moves towards the late ability as `s` grows, and
/// employment depends on the late ability plus any planted demographic
/// shifts for the student's major. The intercept is calibrated on the drawn
/// students so the expected employment rate equals `base_employment_rate`.
pub fn synth_cohort(config: &SynthConfig) -> Result<Cohort> {
    config.validate()?;
    let mut rng = rng::rng_for(config.seed, &[tag::SYNTH]);
    let n = config.num_students;
    let width = n.to_string().len().max(5);

    let mut majors: Vec<u32> = (0..n).map(|i| (i % config.num_majors) as u32 + 1).collect();
    majors.shuffle(&mut rng);
    let college_of = |major: u32| (major as usize - 1) % config.num_colleges;

    // Course catalogue: (id, difficulty offset, credit, college or None for core).
    let mut catalogue: Vec<Vec<(String, f64, f64, Option<usize>)>> = Vec::with_capacity(NUM_SEMESTERS);
    for s in 1..=NUM_SEMESTERS {
        let mut courses = Vec::new();
        for j in 0..config.core_courses_per_semester {
            let d: f64 = rng.sample::<f64, _>(StandardNormal) * 4.0;
            let credit = [2.0, 3.0, 4.0][rng.random_range(0..3)];
            courses.push((format!("CORE-S{s}-{j:02}"), d, credit, None));
        }
        for c in 0..config.num_colleges {
            for j in 0..config.courses_per_semester {
                let d: f64 = rng.sample::<f64, _>(StandardNormal) * 4.0;
                let credit = [2.0, 3.0, 4.0][rng.random_range(0..3)];
                courses.push((format!("C{c:02}-S{s}-{j:02}"), d, credit, Some(c)));
            }
        }
        catalogue.push(courses);
    }

    let mut students = Vec::with_capacity(n);
    let mut grades = Vec::new();
    let mut scores = Vec::with_capacity(n);
    for (i, &major_id) in majors.iter().enumerate() {
        let student_id = format!("S{:0width$}", i + 1);
        let bits: Vec<u8> = config
            .aspect_prevalence
            .iter()
            .map(|&p| u8::from(rng.random_bool(p)))
            .collect();
        let early: f64 = rng.sample(StandardNormal);
        let late: f64 = rng.sample(StandardNormal);
        let college = college_of(major_id);
        for (si, courses) in catalogue.iter().enumerate() {
            let s = si + 1;
            let w = 1.0 - config.ability_drift * (1.0 - s as f64 / NUM_SEMESTERS as f64);
            let ability = (1.0 - w * w).max(0.0).sqrt() * early + w * late;
            for (course_id, difficulty, credit, owner) in courses {
                if owner.is_some_and(|c| c != college) {
                    continue;
                }
                if !rng.random_bool(config.enrollment_density) {
                    continue;
                }
                let noise: f64 = rng.sample(StandardNormal);
                let raw = 75.0 + 10.0 * ability + difficulty + config.grade_noise * noise;
                let score = (raw.clamp(0.0, 100.0) * 10.0).round() / 10.0;
                grades.push(GradeRecord {
                    student_id: student_id.clone(),
                    semester: s as u8,
                    course_id: course_id.clone(),
                    score,
                    credit: *credit,
                });
            }
        }
        let mut score = config.academic_effect * late;
        for b in config.planted_bias_spec.iter().filter(|b| b.major_id == major_id) {
            if bits[b.aspect.index()] == 1 {
                score += b.effect;
            }
        }
        scores.push(score);
        students.push(StudentRecord {
            student_id,
            major_id,
            gender: bits[0],
            nation: bits[1],
            hometown_level: bits[2],
            enroll_status: bits[3],
            label: 0,
        });
    }

    let intercept = calibrate_intercept(&scores, config.base_employment_rate);
    for (s, score) in students.iter_mut().zip(&scores) {
        s.label = u8::from(rng.random_bool(sigmoid(intercept + score)));
    }

    let metadata = Provenance::Synthetic { seed: config.seed };
    let mut cohort = Cohort::new(students, grades, metadata)?;
    // Tiny configs can leave a major unused; the id space is still 1..=M.
    cohort.num_majors = config.num_majors;
    Ok(cohort)
}

/// Splits `cohort` into (train, test) preserving the label proportions.
///
/// Each class contributes `round(test_fraction * n_class)` students to the
/// test side, clamped so both sides keep at least one member of each class.
pub fn stratified_split(cohort: &Cohort, test_fraction: f64, seed: u64) -> Result<(Cohort, Cohort)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test_fraction {test_fraction} must be in (0, 1)")));
    }
    let mut rng = rng::rng_for(seed, &[tag::SPLIT]);
    let mut in_test = vec![false; cohort.len()];
    for label in [0u8, 1] {
        let mut members: Vec<usize> = (0..cohort.len()).filter(|&i| cohort.students[i].label == label).collect();
        if members.len() < 2 {
            return Err(Error::Invalid(format!(
                "class {label} has {} member(s); stratified splitting needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let k = ((test_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        for &i in &members[..k] {
            in_test[i] = true;
        }
    }
    let train_idx: Vec<usize> = (0..cohort.len()).filter(|&i| !in_test[i]).collect();
    let test_idx: Vec<usize> = (0..cohort.len()).filter(|&i| in_test[i]).collect();
    let meta = |part: &str| Provenance::Subset {
        parent_seed: cohort.metadata.seed(),
        split_seed: seed,
        part: part.into(),
    };
    Ok((cohort.subset(&train_idx, meta("train")), cohort.subset(&test_idx, meta("test"))))
}
