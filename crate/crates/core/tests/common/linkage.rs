use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabu_design::fourbar::{grashof_class, FourBar, GrashofClass};

/// Rocker angle by the law of cosines on triangle O4-A-B, on the branch
/// with B to the left of A -> O4. `None` when the loop cannot close.
pub fn rocker_angle(l: [f64; 4], theta2: f64) -> Option<f64> {
    let [a12, a23, a34, a41] = l;
    let (ax, ay) = (a12 * theta2.cos(), a12 * theta2.sin());
    let (dx, dy) = (ax - a41, ay);
    let d = dx.hypot(dy);
    let c = (a34 * a34 + d * d - a23 * a23) / (2.0 * a34 * d);
    if !(-1.0..=1.0).contains(&c) {
        return None;
    }
    // from O4, A sits at angle atan2(dy, dx); B is rotated clockwise from it
    Some(dy.atan2(dx) - c.acos())
}

/// Brute-force classifier: the input link is a crank when the loop closes
/// at every one of 360 crank angles; the output link is a rocker when its
/// unwrapped angle returns without a full turn.
pub fn simulate_class(l: [f64; 4]) -> (bool, bool) {
    let mut prev: Option<f64> = None;
    let mut travel = 0.0;
    for i in 0..=360 {
        let Some(t4) = rocker_angle(l, TAU * i as f64 / 360.0) else {
            return (false, false);
        };
        if let Some(p) = prev {
            let mut d = t4 - p;
            d -= TAU * (d / TAU).round();
            travel += d;
        }
        prev = Some(t4);
    }
    (true, travel.abs() < PI)
}

pub fn oracle_class(l: [f64; 4]) -> GrashofClass {
    let (crank, rocker) = simulate_class(l);
    let longest = l.iter().copied().fold(0.0, f64::max);
    // design rule on top of the mechanics: the longest link must share a pivot with the crank
    let adjacent = l[1] == longest || l[3] == longest;
    let mut s = l;
    s.sort_by(f64::total_cmp);
    if s[3] + s[0] >= s[1] + s[2] {
        // no link can turn fully; double check the simulator agrees
        assert!(!crank, "simulated full rotation for non-Grashof {l:?}");
        return GrashofClass::NonGrashof;
    }
    if crank && rocker && adjacent {
        GrashofClass::CrankRocker
    } else {
        GrashofClass::GrashofNonCrankRocker
    }
}

/// Coupler point with B from bisection on the rocker angle.
pub fn oracle_coupler(m: &FourBar, theta2: f64) -> [f64; 2] {
    let (ax, ay) = (m.a12 * theta2.cos(), m.a12 * theta2.sin());
    let g = |t: f64| {
        let (bx, by) = (m.a41 + m.a34 * t.cos(), m.a34 * t.sin());
        (bx - ax).powi(2) + (by - ay).powi(2) - m.a23 * m.a23
    };
    let n = 720;
    let mut roots = vec![];
    for i in 0..n {
        let (mut lo, mut hi) = (TAU * i as f64 / n as f64, TAU * (i + 1) as f64 / n as f64);
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            roots.push(lo);
            continue;
        }
        if glo.signum() == ghi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == glo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    let b = roots
        .iter()
        .map(|&t| [m.a41 + m.a34 * t.cos(), m.a34 * t.sin()])
        .find(|b| {
            let (ux, uy) = (m.a41 - ax, -ay);
            let (vx, vy) = (b[0] - ax, b[1] - ay);
            ux * vy - uy * vx >= 0.0
        })
        .expect("loop closes");
    let t3 = (b[1] - ay).atan2(b[0] - ax) + m.alpha_deg.to_radians();
    [ax + m.a25 * t3.cos(), ay + m.a25 * t3.sin()]
}

pub fn random_crank_rockers(n: usize, seed: u64) -> Vec<FourBar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    while out.len() < n {
        let l: [f64; 4] = std::array::from_fn(|_| rng.gen_range(10..=250) as f64);
        if grashof_class(l[0], l[1], l[2], l[3]).unwrap() == GrashofClass::CrankRocker {
            out.push(FourBar {
                a12: l[0],
                a23: l[1],
                a34: l[2],
                a41: l[3],
                a25: rng.gen_range(10..=250) as f64,
                alpha_deg: rng.gen_range(-180..=180) as f64,
            });
        }
    }
    out
}
