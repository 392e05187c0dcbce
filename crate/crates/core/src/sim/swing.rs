//! Swing-foot trajectories: clamped cubic B-splines with uniform interior
//! knots, plus smooth retargeting.

use serde::Serialize;

const N_CTRL: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Retarget {
    start: f64,
    offset: [f64; 3],
}

/// Foot position `[x, y, z]` over `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwingSpline {
    control: [[f64; 3]; N_CTRL],
    duration: f64,
    retargets: Vec<Retarget>,
}

/// Clamped knot vector for 7 control points, degree 3: four interior spans.
const KNOTS: [f64; N_CTRL + 4] = [0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0];

/// Cox-de Boor basis values and first two derivatives at `u ∈ [0, 1]`.
fn basis(u: f64) -> [[f64; N_CTRL]; 3] {
    let u = u.clamp(0.0, 1.0);
    let span = if u >= 1.0 {
        N_CTRL - 1
    } else {
        (3..N_CTRL).rfind(|&i| KNOTS[i] <= u).unwrap_or(3)
    };
    // Derivatives by differentiating the recursion (degree ≤ 3, small and exact).
    let mut out = [[0.0; N_CTRL]; 3];
    let n = |i: usize, p: usize, u: f64| -> f64 { bspline(i, p, u, span) };
    for i in 0..N_CTRL {
        out[0][i] = n(i, 3, u);
        out[1][i] = deriv(i, 3, u, span, 1);
        out[2][i] = deriv(i, 3, u, span, 2);
    }
    out
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn bspline(i: usize, p: usize, u: f64, span: usize) -> f64 {
    if p == 0 {
        return if i == span { 1.0 } else { 0.0 };
    }
    ratio(u - KNOTS[i], KNOTS[i + p] - KNOTS[i]) * bspline(i, p - 1, u, span)
        + ratio(KNOTS[i + p + 1] - u, KNOTS[i + p + 1] - KNOTS[i + 1])
            * bspline(i + 1, p - 1, u, span)
}

fn deriv(i: usize, p: usize, u: f64, span: usize, k: usize) -> f64 {
    if k == 0 {
        return bspline(i, p, u, span);
    }
    if p == 0 {
        return 0.0;
    }
    let pf = p as f64;
    pf * (ratio(1.0, KNOTS[i + p] - KNOTS[i]) * deriv(i, p - 1, u, span, k - 1)
        - ratio(1.0, KNOTS[i + p + 1] - KNOTS[i + 1]) * deriv(i + 1, p - 1, u, span, k - 1))
}

/// Smooth 0→1 transition on `[0, 1]` whose derivatives of every order vanish
/// at both ends, with its first two derivatives.
fn transition(u: f64) -> [f64; 3] {
    if u <= 0.0 {
        return [0.0; 3];
    }
    if u >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    // f(s) = exp(-1/s); b = f(u) / (f(u) + f(1-u)). Work in logs for the
    // ratio r = f(1-u)/f(u) = exp(1/u - 1/(1-u)).
    let v = 1.0 - u;
    let e = 1.0 / u - 1.0 / v;
    let de = -1.0 / (u * u) - 1.0 / (v * v);
    let dde = 2.0 / (u * u * u) - 2.0 / (v * v * v);
    if e > 700.0 {
        return [0.0; 3];
    }
    let r = e.exp();
    let b = 1.0 / (1.0 + r);
    // db/du = -r e' b², d²b/du² = -(r e'² + r e'') b² + 2 r² e'² b³
    let db = -r * de * b * b;
    let ddb = -(r * de * de + r * dde) * b * b + 2.0 * r * r * de * de * b * b * b;
    [b, db, ddb]
}

impl SwingSpline {
    /// Lift-off at `from`, touch-down at `to` (ground height 0), peak height
    /// `apex_height`. Starts and ends with zero velocity and acceleration.
    pub fn new(from: [f64; 2], to: [f64; 2], apex_height: f64, duration: f64) -> Self {
        assert!(duration > 0.0, "swing duration must be positive");
        let lerp = |s: f64| {
            [
                from[0] + s * (to[0] - from[0]),
                from[1] + s * (to[1] - from[1]),
            ]
        };
        // Scale the lifted control points so mid-swing reaches apex_height.
        let unit: f64 = basis(0.5)[0][2..5].iter().sum();
        let lift = apex_height / unit;
        let mid = [lerp(0.25), lerp(0.5), lerp(0.75)];
        let control = [
            [from[0], from[1], 0.0],
            [from[0], from[1], 0.0],
            [mid[0][0], mid[0][1], lift],
            [mid[1][0], mid[1][1], lift],
            [mid[2][0], mid[2][1], lift],
            [to[0], to[1], 0.0],
            [to[0], to[1], 0.0],
        ];
        SwingSpline {
            control,
            duration,
            retargets: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Position, velocity and acceleration at time `t` (clamped to the
    /// duration).
    pub fn eval(&self, t: f64) -> [[f64; 3]; 3] {
        let t = t.clamp(0.0, self.duration);
        let b = basis(t / self.duration);
        let mut out = [[0.0; 3]; 3];
        for (k, row) in b.iter().enumerate() {
            let scale = self.duration.powi(-(k as i32));
            for (i, w) in row.iter().enumerate() {
                for d in 0..3 {
                    out[k][d] += w * self.control[i][d] * scale;
                }
            }
        }
        for r in &self.retargets {
            let span = self.duration - r.start;
            let s = transition((t - r.start) / span);
            for k in 0..3 {
                let scale = span.powi(-(k as i32));
                for d in 0..3 {
                    out[k][d] += s[k] * r.offset[d] * scale;
                }
            }
        }
        out
    }

    pub fn position(&self, t: f64) -> [f64; 3] {
        self.eval(t)[0]
    }

    pub fn end(&self) -> [f64; 3] {
        self.position(self.duration)
    }
}

/// Moves the touch-down point to `new_to` from time `t_now` on, leaving the
/// trajectory before `t_now` untouched and every derivative continuous.
pub fn retarget(spline: &SwingSpline, t_now: f64, new_to: [f64; 2]) -> SwingSpline {
    let mut out = spline.clone();
    let end = spline.end();
    let offset = [new_to[0] - end[0], new_to[1] - end[1], 0.0];
    if t_now >= spline.duration || (offset[0] == 0.0 && offset[1] == 0.0) {
        return out;
    }
    out.retargets.push(Retarget {
        start: t_now.max(0.0),
        offset,
    });
    out
}
