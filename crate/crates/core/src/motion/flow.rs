//! Horn–Schunck dense optical flow.
//!
//! Derivatives use the 2×2×2 cube stencil: each of `Ix`, `Iy`, `It` is the
//! mean of the four first differences along that axis inside the cube spanned
//! by pixel `(row, col)`, its right/down neighbours, and both frames. Indices
//! past the border are clamped. The fixed-point sweep is Jacobi style:
//!
//! ```text
//! u ← ū − Ix·(Ix·ū + Iy·v̄ + It) / (α² + Ix² + Iy²)
//! v ← v̄ − Iy·(Ix·ū + Iy·v̄ + It) / (α² + Ix² + Iy²)
//! ```
//!
//! with `ū`, `v̄` the 4-neighbour means of the previous sweep.

use super::{FlowField, FlowParams, FrameGray, MotionError};

struct Derivatives {
    ix: Vec<f64>,
    iy: Vec<f64>,
    it: Vec<f64>,
}

fn derivatives(a: &FrameGray, b: &FrameGray) -> Derivatives {
    let (w, h) = (a.width(), a.height());
    let (pa, pb) = (a.pixels(), b.pixels());
    let n = w * h;
    let mut d = Derivatives {
        ix: vec![0.0; n],
        iy: vec![0.0; n],
        it: vec![0.0; n],
    };
    for r in 0..h {
        let r1 = (r + 1).min(h - 1);
        for c in 0..w {
            let c1 = (c + 1).min(w - 1);
            let (p00, p01, p10, p11) = (r * w + c, r * w + c1, r1 * w + c, r1 * w + c1);
            let k = p00;
            d.ix[k] = 0.25
                * ((pa[p01] - pa[p00])
                    + (pa[p11] - pa[p10])
                    + (pb[p01] - pb[p00])
                    + (pb[p11] - pb[p10]));
            d.iy[k] = 0.25
                * ((pa[p10] - pa[p00])
                    + (pa[p11] - pa[p01])
                    + (pb[p10] - pb[p00])
                    + (pb[p11] - pb[p01]));
            d.it[k] = 0.25
                * ((pb[p00] - pa[p00])
                    + (pb[p01] - pa[p01])
                    + (pb[p10] - pa[p10])
                    + (pb[p11] - pa[p11]));
        }
    }
    d
}

fn neighbour_mean(field: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for r in 0..h {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(h - 1);
        for c in 0..w {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(w - 1);
            out[r * w + c] = 0.25
                * (field[up * w + c]
                    + field[down * w + c]
                    + field[r * w + left]
                    + field[r * w + right]);
        }
    }
}

/// Flow from `a` to `b` after exactly `params.iterations` sweeps from zero.
pub fn horn_schunck(
    a: &FrameGray,
    b: &FrameGray,
    params: &FlowParams,
) -> Result<FlowField, MotionError> {
    params.validate()?;
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(MotionError::FrameSize {
            expected: (a.width(), a.height()),
            found: (b.width(), b.height()),
        });
    }
    let (w, h) = (a.width(), a.height());
    if w < 2 || h < 2 {
        return Err(MotionError::FrameTooSmall {
            width: w,
            height: h,
        });
    }
    let d = derivatives(a, b);
    let alpha2 = params.alpha * params.alpha;
    let denom: Vec<f64> =
        d.ix.iter()
            .zip(&d.iy)
            .map(|(x, y)| alpha2 + x * x + y * y)
            .collect();

    let n = w * h;
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut ubar, mut vbar) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..params.iterations {
        neighbour_mean(&u, w, h, &mut ubar);
        neighbour_mean(&v, w, h, &mut vbar);
        for k in 0..n {
            let t = (d.ix[k] * ubar[k] + d.iy[k] * vbar[k] + d.it[k]) / denom[k];
            u[k] = ubar[k] - d.ix[k] * t;
            v[k] = vbar[k] - d.iy[k] * t;
        }
    }
    Ok(FlowField {
        width: w,
        height: h,
        u,
        v,
    })
}
