//! Steady-state perturbation experiments and per-row sensing systems.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::io;
use crate::linalg;
use crate::network::Network;

/// `I - Q(0)` with a larger condition number is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// One experiment: a set of step inputs applied to the diagonal of `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub inputs: Vec<usize>,
    pub magnitudes: Vec<f64>,
}

impl ExperimentPlan {
    /// Unit steps on every listed input.
    pub fn unit(inputs: Vec<usize>) -> Self {
        let magnitudes = vec![1.0; inputs.len()];
        Self { inputs, magnitudes }
    }

    pub fn single(input: usize) -> Self {
        Self::unit(vec![input])
    }

    pub fn new(inputs: Vec<usize>, magnitudes: Vec<f64>) -> Self {
        Self { inputs, magnitudes }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.inputs.is_empty() {
            return param("experiment plan has no inputs");
        }
        if self.magnitudes.len() != self.inputs.len() {
            return param("experiment plan needs one magnitude per input");
        }
        let mut seen = vec![false; p];
        for &i in &self.inputs {
            if i >= p {
                return param(format!("input index {i} out of range for p={p}"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return param(format!("input {i} listed twice"));
            }
        }
        if self.magnitudes.iter().any(|m| *m == 0.0 || !m.is_finite()) {
            return param("input magnitudes must be finite and nonzero");
        }
        Ok(())
    }
}

/// Concatenated experiment data: column `j` of `y`/`u` is experiment `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub y: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// How many experiments applied each input.
    pub usage: Vec<usize>,
    pub plans: Vec<ExperimentPlan>,
}

impl DataSet {
    pub fn p(&self) -> usize {
        self.y.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    /// Run one more experiment on `net` and append its column.
    pub fn push(&mut self, net: &Network, plan: ExperimentPlan) -> Result<()> {
        let extra = simulate(net, std::slice::from_ref(&plan))?;
        let m = self.m();
        self.y = self.y.clone().insert_column(m, 0.0);
        self.u = self.u.clone().insert_column(m, 0.0);
        self.y.set_column(m, &extra.y.column(0));
        self.u.set_column(m, &extra.u.column(0));
        for &i in &plan.inputs {
            self.usage[i] += 1;
        }
        self.plans.push(plan);
        Ok(())
    }

    /// The first `m` experiments.
    pub fn prefix(&self, m: usize) -> Result<DataSet> {
        if m == 0 || m > self.m() {
            return param(format!("prefix length {m} outside 1..={}", self.m()));
        }
        let plans = self.plans[..m].to_vec();
        Ok(DataSet {
            y: self.y.columns(0, m).into_owned(),
            u: self.u.columns(0, m).into_owned(),
            usage: usage_counts(self.p(), &plans),
            plans,
        })
    }

    /// Write `Y.csv`, `U.csv` and `plans.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        io::save_matrix_csv(&dir.join("Y.csv"), &self.y, "e")?;
        io::save_matrix_csv(&dir.join("U.csv"), &self.u, "e")?;
        let sidecar = PlansFile { plans: self.plans.clone() };
        fs::write(dir.join("plans.json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<DataSet> {
        let y = io::load_matrix_csv(&dir.join("Y.csv"))?;
        let u = io::load_matrix_csv(&dir.join("U.csv"))?;
        let sidecar: PlansFile = serde_json::from_str(&fs::read_to_string(dir.join("plans.json"))?)?;
        Self::from_parts(y, u, sidecar.plans)
    }

    /// Assemble a dataset from raw matrices, checking them against the plans.
    pub fn from_parts(y: DMatrix<f64>, u: DMatrix<f64>, plans: Vec<ExperimentPlan>) -> Result<DataSet> {
        let p = y.nrows();
        if u.nrows() != p || u.ncols() != y.ncols() {
            return param(format!(
                "Y is {}x{} but U is {}x{}",
                y.nrows(),
                y.ncols(),
                u.nrows(),
                u.ncols()
            ));
        }
        if y.ncols() == 0 || plans.len() != y.ncols() {
            return param(format!("{} plans for {} experiments", plans.len(), y.ncols()));
        }
        for (j, plan) in plans.iter().enumerate() {
            plan.validate(p)?;
            for i in 0..p {
                let expected = plan
                    .inputs
                    .iter()
                    .position(|&x| x == i)
                    .map_or(0.0, |pos| plan.magnitudes[pos]);
                if u[(i, j)] != expected {
                    return param(format!("U({i},{j}) = {} disagrees with plan {j}", u[(i, j)]));
                }
            }
        }
        Ok(DataSet { usage: usage_counts(p, &plans), y, u, plans })
    }
}

#[derive(Serialize, Deserialize)]
struct PlansFile {
    plans: Vec<ExperimentPlan>,
}

fn usage_counts(p: usize, plans: &[ExperimentPlan]) -> Vec<usize> {
    let mut usage = vec![0; p];
    for plan in plans {
        for &i in &plan.inputs {
            usage[i] += 1;
        }
    }
    usage
}

/// Steady-state responses `Y = (I - Q0)^-1 P0 U` for each plan.
pub fn simulate(net: &Network, plans: &[ExperimentPlan]) -> Result<DataSet> {
    if plans.is_empty() {
        return param("simulate needs at least one experiment plan");
    }
    let p = net.p;
    for plan in plans {
        plan.validate(p)?;
    }
    let (q0, p0) = (net.q0(), net.p0());
    let lhs = DMatrix::identity(p, p) - q0;
    let condition = linalg::condition_number(&lhs);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllPosedNetwork { condition });
    }
    let mut u = DMatrix::zeros(p, plans.len());
    for (j, plan) in plans.iter().enumerate() {
        for (&i, &mag) in plan.inputs.iter().zip(&plan.magnitudes) {
            u[(i, j)] = mag;
        }
    }
    let rhs = &p0 * &u;
    let y = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllPosedNetwork { condition: f64::INFINITY })?;
    Ok(DataSet {
        y,
        u,
        usage: usage_counts(p, plans),
        plans: plans.to_vec(),
    })
}

/// The sensing problem `[A1 A2] [x1; x2] = b` for one row of `[Q P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSystem {
    pub row: usize,
    /// `Y^T` without column `row`.
    pub a1: DMatrix<f64>,
    /// Column `row` of `U^T`.
    pub a2: DMatrix<f64>,
    /// Column `row` of `Y^T`.
    pub b: DVector<f64>,
    /// `col_map[c]` is the state that column `c` of `a1` belongs to.
    pub col_map: Vec<usize>,
}

impl RowSystem {
    /// `[A1 A2]`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let n1 = self.a1.ncols();
        let mut a = DMatrix::zeros(self.a1.nrows(), n1 + self.a2.ncols());
        a.columns_mut(0, n1).copy_from(&self.a1);
        a.columns_mut(n1, self.a2.ncols()).copy_from(&self.a2);
        a
    }

    /// Off-diagonal entries of a `Q` row, in `a1` column order.
    pub fn gather(&self, q_row: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.col_map.len(), self.col_map.iter().map(|&j| q_row[j]))
    }

    /// Inverse of [`RowSystem::gather`]: spread `x1` into a full row with zero diagonal.
    pub fn scatter(&self, x1: &DVector<f64>, p: usize) -> Vec<f64> {
        let mut row = vec![0.0; p];
        for (c, &j) in self.col_map.iter().enumerate() {
            row[j] = x1[c];
        }
        row
    }
}

pub fn assemble_row_system(data: &DataSet, i: usize) -> Result<RowSystem> {
    let p = data.p();
    if i >= p {
        return param(format!("row {i} out of range for p={p}"));
    }
    let yt = data.y.transpose();
    let col_map: Vec<usize> = (0..p).filter(|&j| j != i).collect();
    Ok(RowSystem {
        row: i,
        a1: linalg::select_columns(&yt, &col_map),
        a2: DMatrix::from_column_slice(data.m(), 1, data.u.row(i).transpose().as_slice()),
        b: yt.column(i).into_owned(),
        col_map,
    })
}
