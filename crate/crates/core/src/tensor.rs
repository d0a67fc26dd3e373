//! Pointwise matrix algebra on physical-space samples.
//!
//! Matrix fields have shape `m×m` with components stored row-major, so entry
//! `(α, β)` is component `α·m + β`.

use crate::field::{RealField, Shape};

fn side(a: &RealField) -> usize {
    assert!(a.shape.is_square_matrix(), "expected a square matrix field, got {}", a.shape);
    a.shape.dims()[0]
}

pub fn identity(like: &RealField, m: usize) -> RealField {
    let mut out = RealField::zeros(&like.grid, Shape::matrix(m, m));
    for a in 0..m {
        out.data[a * m + a].iter_mut().for_each(|v| *v = 1.0);
    }
    out
}

/// Pointwise matrix product `A B`.
pub fn matmul(a: &RealField, b: &RealField) -> RealField {
    let m = side(a);
    assert_eq!(m, side(b), "matmul size mismatch");
    let n = a.len();
    let mut out = RealField::zeros(&a.grid, Shape::matrix(m, m));
    for i in 0..m {
        for j in 0..m {
            let dst = &mut out.data[i * m + j];
            for k in 0..m {
                let x = &a.data[i * m + k];
                let y = &b.data[k * m + j];
                for p in 0..n {
                    dst[p] += x[p] * y[p];
                }
            }
        }
    }
    out
}

pub fn transpose(a: &RealField) -> RealField {
    let m = side(a);
    let mut out = a.clone();
    for i in 0..m {
        for j in 0..m {
            out.data[i * m + j] = a.data[j * m + i].clone();
        }
    }
    out
}

pub fn trace(a: &RealField) -> RealField {
    let m = side(a);
    let mut out = RealField::zeros(&a.grid, Shape::scalar());
    for i in 0..m {
        for (o, v) in out.data[0].iter_mut().zip(&a.data[i * m + i]) {
            *o += v;
        }
    }
    out
}

/// Pointwise full contraction `A:B = Σ_{αβ} A_{αβ} B_{αβ}` for tensors of equal shape.
pub fn contract(a: &RealField, b: &RealField) -> RealField {
    assert_eq!(a.shape, b.shape, "contraction shape mismatch");
    let mut out = RealField::zeros(&a.grid, Shape::scalar());
    for (x, y) in a.data.iter().zip(&b.data) {
        for ((o, p), q) in out.data[0].iter_mut().zip(x).zip(y) {
            *o += p * q;
        }
    }
    out
}

/// Pointwise `tr(A B) = Σ_{αβ} A_{αβ} B_{βα}`.
pub fn trace_product(a: &RealField, b: &RealField) -> RealField {
    contract(a, &transpose(b))
}

/// Multiply every component by a scalar field.
pub fn scale_by(s: &RealField, a: &RealField) -> RealField {
    assert_eq!(s.n_components(), 1, "scale_by expects a scalar field");
    let f = &s.data[0];
    RealField {
        grid: a.grid.clone(),
        shape: a.shape.clone(),
        data: a
            .data
            .iter()
            .map(|c| c.iter().zip(f).map(|(x, y)| x * y).collect())
            .collect(),
    }
}

/// `A + c·Id`.
pub fn add_identity(a: &RealField, c: f64) -> RealField {
    let m = side(a);
    let mut out = a.clone();
    for i in 0..m {
        out.data[i * m + i].iter_mut().for_each(|v| *v += c);
    }
    out
}

/// `A + s·Id` for a scalar field `s`.
pub fn add_scalar_identity(a: &RealField, s: &RealField) -> RealField {
    let m = side(a);
    let mut out = a.clone();
    for i in 0..m {
        for (v, x) in out.data[i * m + i].iter_mut().zip(&s.data[0]) {
            *v += x;
        }
    }
    out
}

pub fn sym_part(a: &RealField) -> RealField {
    a.add(&transpose(a)).scale(0.5)
}

pub fn antisym_part(a: &RealField) -> RealField {
    a.sub(&transpose(a)).scale(0.5)
}

/// Symmetric trace-free part `½(A + Aᵀ) − tr(A)/m·Id`.
pub fn sym_tracefree(a: &RealField) -> RealField {
    let m = side(a);
    let s = sym_part(a);
    let tr = trace(&s).scale(-1.0 / m as f64);
    add_scalar_identity(&s, &tr)
}

/// Pointwise `A v` for a matrix field and a vector field.
pub fn matvec(a: &RealField, v: &RealField) -> RealField {
    let m = side(a);
    assert_eq!(v.shape, Shape::vector(m), "matvec size mismatch");
    let mut out = RealField::zeros(&a.grid, Shape::vector(m));
    for i in 0..m {
        for k in 0..m {
            for ((o, x), y) in out.data[i].iter_mut().zip(&a.data[i * m + k]).zip(&v.data[k]) {
                *o += x * y;
            }
        }
    }
    out
}

/// Relative Frobenius-norm defect `‖A − Aᵀ‖ / ‖A‖` over the box.
pub fn symmetry_defect(a: &RealField) -> f64 {
    relative(&a.sub(&transpose(a)), a)
}

/// Relative defect `‖A + Aᵀ‖ / ‖A‖`.
pub fn antisymmetry_defect(a: &RealField) -> f64 {
    relative(&a.add(&transpose(a)), a)
}

/// Relative trace defect `‖tr A‖ / ‖A‖`.
pub fn trace_defect(a: &RealField) -> f64 {
    relative(&trace(a), a)
}

fn relative(num: &RealField, den: &RealField) -> f64 {
    let d = den.lp_norm(2.0);
    let n = num.lp_norm(2.0);
    if d == 0.0 {
        n
    } else {
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn constant(m: usize, vals: &[f64]) -> RealField {
        let g = Grid::new(2, 8, 1.0).unwrap();
        RealField::from_fn(&g, Shape::matrix(m, m), |c, _| vals[c])
    }

    #[test]
    fn matrix_product_and_trace() {
        let a = constant(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = constant(2, &[0.0, 1.0, -1.0, 2.0]);
        let p = matmul(&a, &b);
        let expect = [-2.0, 5.0, -4.0, 11.0];
        for (c, e) in expect.iter().enumerate() {
            assert!(p.data[c].iter().all(|v| (v - e).abs() < 1e-15));
        }
        assert!(trace(&p).data[0].iter().all(|v| (v - 9.0).abs() < 1e-15));
        assert!(trace_product(&a, &b).data[0].iter().all(|v| (v - 9.0).abs() < 1e-15));
    }

    #[test]
    fn sym_tracefree_projection() {
        let a = constant(3, &[1.0, 2.0, 0.5, -1.0, 4.0, 3.0, 2.0, 0.0, 1.0]);
        let s = sym_tracefree(&a);
        assert!(symmetry_defect(&s) < 1e-15);
        assert!(trace_defect(&s) < 1e-15);
        assert!(antisymmetry_defect(&antisym_part(&a)) < 1e-15);
        let back = sym_part(&a).add(&antisym_part(&a));
        assert!(back.sub(&a).max_abs() < 1e-15);
    }
}
