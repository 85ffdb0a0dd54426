//! Per-major chi-square independence tests between each demographic aspect
//! and employment, and the bias profiles derived from them.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::cohort::{Aspect, Cohort};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};

/// p-values below this flag a major/aspect pair as biased.
pub const SIGNIFICANCE: f64 = 0.05;

/// 2x2 counts: `counts[aspect value][label]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: [[u64; 2]; 2],
}

impl ContingencyTable {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        ContingencyTable { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [u64; 2] {
        [self.counts[0][0] + self.counts[0][1], self.counts[1][0] + self.counts[1][1]]
    }

    pub fn col_sums(&self) -> [u64; 2] {
        [self.counts[0][0] + self.counts[1][0], self.counts[0][1] + self.counts[1][1]]
    }

    pub fn transposed(&self) -> Self {
        let c = self.counts;
        ContingencyTable::new([[c[0][0], c[1][0]], [c[0][1], c[1][1]]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
    /// A zero marginal makes the test undefined; such tables report p = 1.
    pub degenerate: bool,
}

/// Counts students of `major_id` by their `aspect` indicator and label.
pub fn contingency_table(cohort: &Cohort, major_id: u32, aspect: Aspect) -> Result<ContingencyTable> {
    let mut counts = [[0u64; 2]; 2];
    for s in cohort.students.iter().filter(|s| s.major_id == major_id) {
        counts[s.aspect(aspect) as usize][s.label as usize] += 1;
    }
    let table = ContingencyTable::new(counts);
    if table.total() == 0 {
        return Err(Error::Invalid(format!("major {major_id} has no students")));
    }
    Ok(table)
}

/// Pearson's chi-square test of independence (df = 1, no continuity
/// correction). The upper tail of chi-square(1) at `x` is `erfc(sqrt(x/2))`.
pub fn chi_square_p(table: &ContingencyTable) -> ChiSquare {
    let rows = table.row_sums();
    let cols = table.col_sums();
    if rows.contains(&0) || cols.contains(&0) {
        return ChiSquare {
            statistic: 0.0,
            p_value: 1.0,
            degenerate: true,
        };
    }
    let n = table.total() as f64;
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let d = table.counts[i][j] as f64 - expected;
            statistic += d * d / expected;
        }
    }
    let p_value = erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0);
    ChiSquare {
        statistic,
        p_value,
        degenerate: false,
    }
}

/// `(e^(1-u) - e^(1+u)) / (e^(1-u) + e^(1+u))`, evaluated as written. This
/// equals `-tanh(u)`; the sign limit is returned once the exponentials
/// overflow.
pub fn transform(u: f64) -> f64 {
    let a = (1.0 - u).exp();
    let b = (1.0 + u).exp();
    let v = (a - b) / (a + b);
    if v.is_finite() {
        v
    } else {
        -u.signum()
    }
}

/// How p-values are mapped to bias weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasWeightMode {
    /// `u = transform(p)`.
    #[default]
    AsWritten,
    /// `u = transform(1 - p)`: lower p-values get larger weights.
    Complement,
}

impl BiasWeightMode {
    pub fn weight(self, p: f64) -> f64 {
        match self {
            BiasWeightMode::AsWritten => transform(p),
            BiasWeightMode::Complement => transform(1.0 - p),
        }
    }
}

/// Test results for one major across the four aspects, in [`Aspect::ALL`]
/// order, and the transformed weight vector `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasProfile {
    pub major_id: u32,
    pub num_students: u64,
    pub statistics: [f64; 4],
    pub p_values: [f64; 4],
    pub degenerate: [bool; 4],
    pub u: [f64; 4],
}

impl BiasProfile {
    pub fn significant(&self, aspect: Aspect) -> bool {
        self.p_values[aspect.index()] < SIGNIFICANCE
    }
}

pub fn bias_profile(cohort: &Cohort, major_id: u32, mode: BiasWeightMode) -> Result<BiasProfile> {
    let mut profile = BiasProfile {
        major_id,
        num_students: 0,
        statistics: [0.0; 4],
        p_values: [1.0; 4],
        degenerate: [false; 4],
        u: [0.0; 4],
    };
    for aspect in Aspect::ALL {
        let table = contingency_table(cohort, major_id, aspect)?;
        let test = chi_square_p(&table);
        let k = aspect.index();
        profile.num_students = table.total();
        profile.statistics[k] = test.statistic;
        profile.p_values[k] = test.p_value;
        profile.degenerate[k] = test.degenerate;
        profile.u[k] = mode.weight(test.p_value);
    }
    Ok(profile)
}

/// Profiles for every major that has students, ordered by major id.
pub fn bias_profiles(cohort: &Cohort, mode: BiasWeightMode, exec: ExecMode) -> Result<Vec<BiasProfile>> {
    let majors = cohort.majors_present();
    exec::map(exec, &majors, |&m| bias_profile(cohort, m, mode))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectResult {
    pub aspect: Aspect,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorReport {
    pub major_id: u32,
    pub num_students: u64,
    pub aspects: Vec<AspectResult>,
}

/// Machine-readable summary of every per-major test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub threshold: f64,
    pub majors: Vec<MajorReport>,
    /// Majors flagged per aspect.
    pub flagged: Vec<(Aspect, Vec<u32>)>,
}

impl BiasReport {
    pub fn from_profiles(profiles: &[BiasProfile]) -> Self {
        let majors = profiles
            .iter()
            .map(|p| MajorReport {
                major_id: p.major_id,
                num_students: p.num_students,
                aspects: Aspect::ALL
                    .iter()
                    .map(|&a| {
                        let k = a.index();
                        AspectResult {
                            aspect: a,
                            statistic: p.statistics[k],
                            p_value: p.p_values[k],
                            significant: p.p_values[k] < SIGNIFICANCE,
                            degenerate: p.degenerate[k],
                        }
                    })
                    .collect(),
            })
            .collect();
        let flagged = Aspect::ALL
            .iter()
            .map(|&a| {
                let ids = profiles.iter().filter(|p| p.significant(a)).map(|p| p.major_id).collect();
                (a, ids)
            })
            .collect();
        BiasReport {
            threshold: SIGNIFICANCE,
            majors,
            flagged,
        }
    }
}
