//! Dense two-phase simplex for the small charge-allocation programs.
//!
//! Minimizes `c . x` subject to linear rows and `x >= 0`. Bland's rule is
//! used throughout, so degenerate programs terminate.

const PIVOT_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.vars());
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    /// First artificial column; artificials run up to `rhs`.
    art: usize,
    rhs: usize,
}

#[derive(Debug, PartialEq)]
enum Phase {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.vars();
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let arts = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let art = n + slacks;
        let rhs = art + arts;
        let mut t = vec![vec![0.0; rhs + 1]; rows.len()];
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut a) = (n, art);
        for (row, (coeffs, rel, b)) in t.iter_mut().zip(&rows) {
            row[..n].copy_from_slice(coeffs);
            row[rhs] = *b;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
        }
        Tableau { t, basis, n, art, rhs }
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for the column costs `cost`.
    fn reduced(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = cost.to_vec();
        obj.push(0.0);
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, rv) in obj.iter_mut().zip(row) {
                    *v -= cb * rv;
                }
            }
        }
        obj
    }

    fn iterate(&mut self, obj: &mut [f64], columns: usize) -> Phase {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..columns).find(|&j| obj[j] < -PIVOT_EPS) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[self.rhs] / row[c];
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - PIVOT_EPS
                                || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(obj, r, c),
                None => return Phase::Unbounded,
            }
        }
        Phase::Stalled
    }

    fn run(mut self, objective: &[f64]) -> LpOutcome {
        let rhs = self.rhs;
        if self.art < rhs {
            let mut cost = vec![0.0; rhs];
            cost[self.art..].iter_mut().for_each(|c| *c = 1.0);
            let mut obj = self.reduced(&cost);
            if self.iterate(&mut obj, rhs) != Phase::Optimal || -obj[rhs] > FEAS_EPS {
                return LpOutcome::Infeasible;
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut r = 0;
            while r < self.t.len() {
                if self.basis[r] >= self.art {
                    match (0..self.art).find(|&j| self.t[r][j].abs() > PIVOT_EPS) {
                        Some(c) => self.pivot(&mut obj, r, c),
                        None => {
                            self.t.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        let mut cost = vec![0.0; rhs];
        cost[..self.n].copy_from_slice(objective);
        let mut obj = self.reduced(&cost);
        match self.iterate(&mut obj, self.art) {
            Phase::Optimal => {}
            Phase::Unbounded => return LpOutcome::Unbounded,
            Phase::Stalled => return LpOutcome::Infeasible,
        }
        let mut x = vec![0.0; self.n];
        for (row, &b) in self.t.iter().zip(&self.basis) {
            if b < self.n {
                x[b] = row[rhs].max(0.0);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, value }
    }
}
