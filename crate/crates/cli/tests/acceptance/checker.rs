//! Second, matrix-form implementation of the route constraints, written
//! without the library's checker: it rebuilds the binary and continuous
//! decision variables from a route and tests each constraint literally.

use evrp::instance::Instance;
use evrp::model::RouteSolution;

const EPS: f64 = 1e-6;
const Z_EPS: f64 = 1e-9;

pub struct Vars {
    pub x: Vec<Vec<u32>>,
    pub w_s: Vec<u32>,
    pub w_d: Vec<u32>,
    pub z: Vec<bool>,
    pub y: Vec<f64>,
}

/// Decision variables implied by the route; `None` for ids outside V.
pub fn variables(inst: &Instance, sol: &RouteSolution) -> Option<Vars> {
    let n = inst.stations.len();
    if sol.path.iter().chain(sol.charge.keys()).any(|&v| v >= n) {
        return None;
    }
    let mut x = vec![vec![0u32; n]; n];
    for w in sol.path.windows(2) {
        x[w[0]][w[1]] += 1;
    }
    let mut w_s = vec![0u32; n];
    let mut w_d = vec![0u32; n];
    if let (Some(&f), Some(&l)) = (sol.path.first(), sol.path.last()) {
        w_s[f] = 1;
        w_d[l] = 1;
    }
    let mut y = vec![0.0; n];
    let mut z = vec![false; n];
    for (&i, &v) in &sol.charge {
        y[i] = v;
        z[i] = v > Z_EPS;
    }
    Some(Vars { x, w_s, w_d, z, y })
}

pub fn feasible(inst: &Instance, sol: &RouteSolution) -> bool {
    let Some(Vars { x, w_s, w_d, z, y }) = variables(inst, sol) else {
        return false;
    };
    let n = x.len();
    let g = &inst.graph;
    let p = &inst.params;
    let cg = p.capacity * p.mileage;
    let d_s = |i: usize| g.source_dist.get(&i).copied();
    let d_d = |i: usize| g.dest_dist.get(&i).copied();
    let d = |i: usize, j: usize| g.edges().iter().find(|e| e.from == i && e.to == j).map(|e| e.km);

    // Binary selections, and each selected variable needs its distance.
    for i in 0..n {
        if w_s[i] > 1 || w_d[i] > 1 {
            return false;
        }
        if (w_s[i] == 1 && d_s(i).is_none()) || (w_d[i] == 1 && d_d(i).is_none()) {
            return false;
        }
        for j in 0..n {
            if x[i][j] > 1 || (x[i][j] == 1 && i != j && d(i, j).is_none()) {
                return false;
            }
        }
    }
    // S is left once, D is entered once.
    if w_s.iter().sum::<u32>() != 1 || w_d.iter().sum::<u32>() != 1 {
        return false;
    }
    for j in 0..n {
        let into: u32 = (0..n).map(|i| x[i][j]).sum();
        let out: u32 = (0..n).map(|k| x[j][k]).sum();
        // Degrees at most one, flow conservation, no self-loops.
        if into > 1 || out > 1 || into + w_s[j] != out + w_d[j] || x[j][j] != 0 {
            return false;
        }
    }
    let visited: Vec<bool> = (0..n).map(|i| w_s[i] == 1 || (0..n).any(|k| x[k][i] == 1)).collect();
    for i in 0..n {
        // Charge bounds.
        if !(0.0..=1.0).contains(&y[i]) {
            return false;
        }
    }
    // A charge record names a station the route passes through.
    if sol.charge.keys().any(|&i| !visited[i]) {
        return false;
    }

    // The initial charge fixes q at the first node; x propagates it.
    let mut q: Vec<Option<f64>> = vec![None; n];
    let zy = |i: usize| if z[i] { y[i] } else { 0.0 };
    let zd = |i: usize| if z[i] { inst.stations[i].detour_km } else { 0.0 };
    let s = (0..n).find(|&i| w_s[i] == 1).unwrap();
    // The first leg must be drivable on the initial charge.
    if (zd(s) + d_s(s).unwrap()) / cg - p.initial_soc > EPS {
        return false;
    }
    q[s] = Some(p.initial_soc + zy(s) - (zd(s) + d_s(s).unwrap()) / cg);
    for _ in 0..n {
        for i in 0..n {
            for j in 0..n {
                if x[i][j] == 1 {
                    if let (Some(qi), None) = (q[i], q[j]) {
                        // Leg drivable on the departure charge.
                        if (zd(j) + d(i, j).unwrap()) / cg - qi > EPS {
                            return false;
                        }
                        q[j] = Some(qi + zy(j) - (zd(j) + d(i, j).unwrap()) / cg);
                    }
                }
            }
        }
    }
    for i in 0..n {
        if visited[i] {
            // State of charge bounds.
            match q[i] {
                Some(v) if (-EPS..=1.0 + EPS).contains(&v) => {}
                _ => return false,
            }
        }
    }
    // Charge left at D.
    let t = (0..n).find(|&i| w_d[i] == 1).unwrap();
    let beta = q[t].unwrap() - d_d(t).unwrap() / cg;
    (-EPS..=1.0 + EPS).contains(&beta)
}

/// Driven km under the formulas: source leg, edges, destination leg and
/// the detours of charging stops.
pub fn driven_km(inst: &Instance, sol: &RouteSolution) -> f64 {
    let v = variables(inst, sol).expect("known nodes");
    let g = &inst.graph;
    let n = v.x.len();
    let mut km = 0.0;
    for i in 0..n {
        if v.w_s[i] == 1 {
            km += g.source_dist[&i];
        }
        if v.w_d[i] == 1 {
            km += g.dest_dist[&i];
        }
        if v.z[i] {
            km += inst.stations[i].detour_km;
        }
    }
    for e in g.edges() {
        km += v.x[e.from][e.to] as f64 * e.km;
    }
    km
}
