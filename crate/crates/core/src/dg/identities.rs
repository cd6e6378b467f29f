//! Algebraic identities between averages and jumps of traces on a face.

use crate::scalar::Real;

/// One-sided traces `(v-, v+, w-, w+, u-, u+)` at a single face point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSample<S> {
    pub v: [S; 2],
    pub w: [S; 2],
    pub u: [S; 2],
}

fn jmp<S: Real>(a: [S; 2]) -> S {
    a[0] - a[1]
}

fn avg<S: Real>(a: [S; 2]) -> S {
    (a[0] + a[1]) * S::lit(0.5)
}

fn mul<S: Real>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] * b[0], a[1] * b[1]]
}

/// Residuals of the product rule and of the four expansions of `{vw}[vu]` and `[vu]^2`
/// at one sample, in that order.
pub fn face_identity_residuals<S: Real>(s: &FaceSample<S>) -> [S; 5] {
    let (v, w, u) = (s.v, s.w, s.u);
    let q = S::lit(0.25);
    let h = S::lit(0.5);
    let (jv, av) = (jmp(v), avg(v));
    let (jw, aw) = (jmp(w), avg(w));
    let (ju, au) = (jmp(u), avg(u));
    let v2 = mul(v, v);
    let vu = mul(v, u);
    let lhs = avg(mul(v, w)) * jmp(vu);

    let product = jmp(mul(v, w)) - (av * jw + jv * aw);
    let a1 = aw * jmp(mul(v2, u)) - jv * aw * av * au - q * jv * aw * jv * ju
        + q * jv * jv * jw * au
        + q * jv * av * jw * ju;
    let a2 = avg(mul(v2, w)) * ju - q * jv * jv * aw * ju - q * jv * av * jw * ju
        + jv * av * aw * au
        + q * jv * jv * jw * au;
    let a3 =
        aw * jmp(mul(v2, u)) + avg(mul(v2, w)) * ju + h * jv * jv * jw * au - h * jv * jv * aw * ju;
    let a4 = ju * jmp(mul(v2, u)) - q * jv * jv * ju * ju + jv * jv * au * au;
    let jvu = jmp(vu);
    [
        product,
        lhs - a1,
        lhs - a2,
        (lhs + lhs) - a3,
        jvu * jvu - a4,
    ]
}

/// Largest absolute residual of all identities over the samples.
pub fn verify_face_identities<S: Real>(samples: &[FaceSample<S>]) -> S {
    samples
        .iter()
        .flat_map(|s| face_identity_residuals(s))
        .fold(S::zero(), |m, r| m.max(r.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn continuous_traces_are_exact() {
        let s = FaceSample {
            v: [0.3, 0.3],
            w: [-1.7, -1.7],
            u: [2.5, 2.5],
        };
        assert_eq!(verify_face_identities(&[s]), 0.0);
    }

    #[test]
    fn one_sided_expansion() {
        // With the plus traces zero: {vw}[vu] = v^2 w u / 2, [vu]^2 = v^2 u^2.
        let s = FaceSample {
            v: [0.75, 0.0],
            w: [-0.5, 0.0],
            u: [0.25, 0.0],
        };
        assert_eq!(verify_face_identities(&[s]), 0.0);
    }

    proptest! {
        #[test]
        fn identities_hold(v in prop::array::uniform2(-1.0f64..1.0),
                           w in prop::array::uniform2(-1.0f64..1.0),
                           u in prop::array::uniform2(-1.0f64..1.0)) {
            let r = verify_face_identities(&[FaceSample { v, w, u }]);
            prop_assert!(r < 1e-13);
        }
    }
}
