//! Closed-form first and second moments of the SINR numerator `X_k`, the
//! interference `Z_k`, the denominator `Y_k = Z_k + sigma_k^2`, and the
//! cross moment `E[X_k Z_k]`.
//!
//! The free functions work in unit power (`P/K = 1`); [`MomentSet::closed_form`]
//! applies the per-stream power scale so the results are directly comparable
//! with [`crate::channel::sinr_sample`].
//!
//! Three expressions exist in two forms:
//!
//! * `E[X^2]`: the printed polynomial carries an extra `alpha_sr^2` on its
//!   `48 (M-2)(M-1)(N-1)` term. Without it the polynomial equals
//!   `(M)_4 (N)_4`, the exact value.
//! * `E[Z^2]`: the printed `B_{M,N}` only agrees with `E[T1]`/`E[T2]` at
//!   `M = 1`. The consistent value is `A_{M,N} / (M N (M+N))^2`.
//! * `E[X Z]`: the printed `C_{M,N}` is short by `36 M N`. The exact value
//!   is `M N (M+1)(M+2)(N+1)(N+2)(M+N+2)`.
//!
//! [`Variant::Printed`] evaluates the expressions as published (with the
//! interferer sum of `E[X Z]` over `alpha_rj`), [`Variant::Corrected`] the
//! exact ones. The verification harness in [`crate::oracle`] reports both.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::model::{LinkGains, SystemConfig};

/// Which form of a moment expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// As published.
    Printed,
    /// Exact for Rayleigh fading.
    #[default]
    Corrected,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Printed => "printed",
            Variant::Corrected => "corrected",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "printed" => Ok(Variant::Printed),
            "corrected" => Ok(Variant::Corrected),
            other => Err(Error::Config(format!("unknown moment variant {other:?}"))),
        }
    }
}

/// An interfering stream as seen from user k: its allocation weight
/// `lambda_j` and IRS -> user-j pathloss `alpha_rj`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub lambda: f64,
    pub alpha_r: f64,
}

/// Everything the closed forms need about one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLinks {
    pub antennas: usize,
    pub elements: usize,
    pub lambda: f64,
    pub alpha_r: f64,
    /// Source -> IRS pathloss with the reflection amplitude folded in
    /// (`alpha^2 d_sr^-beta`), since `Gamma G_sr` has that per-entry variance.
    pub alpha_sr: f64,
    pub interferers: Vec<Interferer>,
}

impl UserLinks {
    pub fn new(config: &SystemConfig, gains: &LinkGains, k: usize) -> Self {
        let interferers = (0..config.users)
            .filter(|&j| j != k)
            .map(|j| Interferer {
                lambda: config.power_alloc[j],
                alpha_r: gains.irs_user[j],
            })
            .collect();
        UserLinks {
            antennas: config.antennas,
            elements: config.elements,
            lambda: config.power_alloc[k],
            alpha_r: gains.irs_user[k],
            alpha_sr: config.reflection * config.reflection * gains.source_irs,
            interferers,
        }
    }
}

fn rising(x: u128, n: u32) -> u128 {
    (0..n as u128).map(|i| x + i).product()
}

/// `A_{M,N} = M N (M+1)(N+1)(M+N+1)(M+N+2)`.
pub fn coeff_a(m: usize, n: usize) -> f64 {
    let (m, n) = (m as u128, n as u128);
    (m * n * (m + 1) * (n + 1) * (m + n + 1) * (m + n + 2)) as f64
}

/// `B_{M,N}`, the weight on `E[Z]^2` in `E[Z^2]`.
pub fn coeff_b(m: usize, n: usize, variant: Variant) -> f64 {
    let (m, n) = (m as u128, n as u128);
    let (num, den) = match variant {
        Variant::Printed => ((m + 1) * (m + n + 1) * (m + n + 2), m * n * (n + 1)),
        Variant::Corrected => ((m + 1) * (n + 1) * (m + n + 1) * (m + n + 2), m * n * (m + n) * (m + n)),
    };
    num as f64 / den as f64
}

/// `C_{M,N}`, the combinatorial factor of `E[X Z]`.
pub fn coeff_c(m: usize, n: usize, variant: Variant) -> f64 {
    let (mi, ni) = (m as i128, n as i128);
    match variant {
        Variant::Printed => {
            let p = (1 + ni) * (2 + ni);
            let inner = mi.pow(3) * p
                + mi.pow(2) * p * (5 + ni)
                + mi * p * (8 + 3 * ni)
                + 2 * (ni - 1) * (14 + ni * (6 + ni));
            (mi * ni * inner) as f64
        }
        Variant::Corrected => {
            let (m, n) = (m as u128, n as u128);
            (m * n * (m + 1) * (m + 2) * (n + 1) * (n + 2) * (m + n + 2)) as f64
        }
    }
}

/// `E[X_k] = lambda^2 alpha_rk^2 alpha_sr^2 M N (M+1)(N+1)`.
pub fn expected_x(m: usize, n: usize, lambda: f64, alpha_rk: f64, alpha_sr: f64) -> f64 {
    let c = rising(m as u128, 2) * rising(n as u128, 2);
    lambda.powi(2) * alpha_rk.powi(2) * alpha_sr.powi(2) * c as f64
}

/// `E[X_k^2]`.
pub fn expected_x2(m: usize, n: usize, lambda: f64, alpha_rk: f64, alpha_sr: f64, variant: Variant) -> f64 {
    let pre = lambda.powi(4) * alpha_rk.powi(4) * alpha_sr.powi(4);
    match variant {
        Variant::Printed => {
            let (mi, ni) = (m as i128, n as i128);
            let poly = mi.pow(3) * (ni + 1) * (ni + 2) * (ni + 3)
                + 6 * mi.pow(2) * (ni * (ni * (ni + 6) + 3) + 14)
                + mi * (ni * (11 * ni * (ni + 6) + 265) - 78)
                + 6 * (ni * (ni * (ni + 6) - 5) + 22);
            let mn = (mi * ni) as f64;
            pre * mn * (48.0 * alpha_sr.powi(2) * ((mi - 2) * (mi - 1) * (ni - 1)) as f64 + poly as f64)
        }
        Variant::Corrected => pre * (rising(m as u128, 4) * rising(n as u128, 4)) as f64,
    }
}

fn interference_sums(interferers: &[Interferer]) -> (f64, f64) {
    interferers.iter().fold((0.0, 0.0), |(s1, s2), i| {
        let w = i.lambda * i.lambda * i.alpha_r;
        (s1 + w, s2 + w * w)
    })
}

/// `E[Z_k] = M N (M+N) alpha_rk alpha_sr^2 sum_j lambda_j^2 alpha_rj`.
pub fn expected_z(m: usize, n: usize, alpha_sr: f64, alpha_rk: f64, interferers: &[Interferer]) -> f64 {
    let (s1, _) = interference_sums(interferers);
    let c = (m * n * (m + n)) as f64;
    c * alpha_rk * alpha_sr.powi(2) * s1
}

/// `E[T1] = E[|g_k g_j^H|^4]`.
pub fn expected_t1(m: usize, n: usize, alpha_sr: f64, alpha_rk: f64, alpha_rj: f64) -> f64 {
    2.0 * coeff_a(m, n) * alpha_rj.powi(2) * alpha_rk.powi(2) * alpha_sr.powi(4)
}

/// `E[T2] = E[|g_k g_j^H|^2 |g_k g_h^H|^2]` for distinct interferers j, h.
pub fn expected_t2(m: usize, n: usize, alpha_sr: f64, alpha_rk: f64, alpha_rj: f64, alpha_rh: f64) -> f64 {
    coeff_a(m, n) * alpha_rh * alpha_rj * alpha_rk.powi(2) * alpha_sr.powi(4)
}

/// `E[Z_k^2] = A alpha_rk^2 alpha_sr^4 sum_j lambda_j^4 alpha_rj^2 + B E[Z_k]^2`.
pub fn expected_z2(
    m: usize,
    n: usize,
    alpha_sr: f64,
    alpha_rk: f64,
    interferers: &[Interferer],
    variant: Variant,
) -> f64 {
    let (_, s2) = interference_sums(interferers);
    let ez = expected_z(m, n, alpha_sr, alpha_rk, interferers);
    coeff_a(m, n) * alpha_rk.powi(2) * alpha_sr.powi(4) * s2 + coeff_b(m, n, variant) * ez * ez
}

/// `E[Z_k^2]` summed term by term from `E[T1]` (same interferer) and
/// `E[T2]` (ordered pairs of distinct interferers).
pub fn expected_z2_from_terms(m: usize, n: usize, alpha_sr: f64, alpha_rk: f64, interferers: &[Interferer]) -> f64 {
    let mut total = 0.0;
    for (a, ia) in interferers.iter().enumerate() {
        total += ia.lambda.powi(4) * expected_t1(m, n, alpha_sr, alpha_rk, ia.alpha_r);
        for (b, ib) in interferers.iter().enumerate() {
            if a != b {
                total += (ia.lambda * ib.lambda).powi(2) * expected_t2(m, n, alpha_sr, alpha_rk, ia.alpha_r, ib.alpha_r);
            }
        }
    }
    total
}

/// `E[Y_k] = E[Z_k] + sigma^2`.
pub fn expected_y(ez: f64, sigma2: f64) -> f64 {
    ez + sigma2
}

/// `E[Y_k^2] = E[Z_k^2] + 2 E[Z_k] sigma^2 + sigma^4`.
pub fn expected_y2(ez: f64, ez2: f64, sigma2: f64) -> f64 {
    ez2 + 2.0 * ez * sigma2 + sigma2 * sigma2
}

/// `E[X_k Z_k] = alpha_rk^3 alpha_sr^4 lambda_k^2 C_{M,N} sum_j lambda_j^2 alpha_rj`.
pub fn expected_xz(
    m: usize,
    n: usize,
    lambda: f64,
    alpha_rk: f64,
    alpha_sr: f64,
    interferers: &[Interferer],
    variant: Variant,
) -> f64 {
    let (s1, _) = interference_sums(interferers);
    alpha_rk.powi(3) * alpha_sr.powi(4) * lambda.powi(2) * coeff_c(m, n, variant) * s1
}

/// `E[X_k Z_k]` exactly as typeset, with `alpha_rk` inside the interferer
/// sum. Kept for reporting only.
pub fn expected_xz_as_typeset(
    m: usize,
    n: usize,
    lambda: f64,
    alpha_rk: f64,
    alpha_sr: f64,
    interferers: &[Interferer],
) -> f64 {
    let s: f64 = interferers.iter().map(|i| i.lambda * i.lambda * alpha_rk).sum();
    alpha_rk.powi(3) * alpha_sr.powi(4) * lambda.powi(2) * coeff_c(m, n, Variant::Printed) * s
}

/// `Cov(X_k, Y_k) = E[X_k Z_k] - E[X_k] E[Z_k]`; the noise is constant.
pub fn cov_xy(exz: f64, ex: f64, ez: f64) -> f64 {
    exz - ex * ez
}

/// Per-expression choice of form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Forms {
    pub x2: Variant,
    pub z2: Variant,
    pub xz: Variant,
}

impl Forms {
    pub const PRINTED: Forms = Forms {
        x2: Variant::Printed,
        z2: Variant::Printed,
        xz: Variant::Printed,
    };
    pub const CORRECTED: Forms = Forms {
        x2: Variant::Corrected,
        z2: Variant::Corrected,
        xz: Variant::Corrected,
    };
}

/// First and second moments of one user's SINR ingredients, in `P/K`-scaled
/// power units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub ex: f64,
    pub ex2: f64,
    pub ez: f64,
    pub ez2: f64,
    pub ey: f64,
    pub ey2: f64,
    pub exz: f64,
    pub cov_xy: f64,
}

impl MomentSet {
    /// Assembles a set from the five primitive moments; `E[Y]`, `E[Y^2]` and
    /// the covariance are derived.
    pub fn from_primitives(ex: f64, ex2: f64, ez: f64, ez2: f64, exz: f64, noise: f64) -> Self {
        MomentSet {
            ex,
            ex2,
            ez,
            ez2,
            ey: expected_y(ez, noise),
            ey2: expected_y2(ez, ez2, noise),
            exz,
            cov_xy: cov_xy(exz, ex, ez),
        }
    }

    /// Closed-form moments for `links`, with signal and interference scaled
    /// by `power_scale` (second-order quantities by its square).
    pub fn closed_form(links: &UserLinks, power_scale: f64, noise: f64, forms: Forms) -> Self {
        let (m, n) = (links.antennas, links.elements);
        let (lam, ark, asr, intf) = (links.lambda, links.alpha_r, links.alpha_sr, &links.interferers[..]);
        let s = power_scale;
        let s2 = s * s;
        Self::from_primitives(
            s * expected_x(m, n, lam, ark, asr),
            s2 * expected_x2(m, n, lam, ark, asr, forms.x2),
            s * expected_z(m, n, asr, ark, intf),
            s2 * expected_z2(m, n, asr, ark, intf, forms.z2),
            s2 * expected_xz(m, n, lam, ark, asr, intf, forms.xz),
            noise,
        )
    }

    /// Checks positivity, finiteness and Jensen's inequality on both marginals.
    pub fn is_consistent(&self) -> bool {
        let finite = [self.ex, self.ex2, self.ez, self.ez2, self.ey, self.ey2, self.exz, self.cov_xy]
            .iter()
            .all(|v| v.is_finite());
        finite && self.ex > 0.0 && self.ey > 0.0 && self.ex2 >= self.ex * self.ex && self.ey2 >= self.ey * self.ey
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one(lambda2: f64, alpha_r: f64) -> Interferer {
        Interferer { lambda: lambda2.sqrt(), alpha_r }
    }

    // Rayleigh power moments: E|h|^{2p} = p! alpha^p.
    fn rayleigh(p: u32, alpha: f64) -> f64 {
        (1..=p).product::<u32>() as f64 * alpha.powi(p as i32)
    }

    #[test]
    fn scalar_case_matches_rayleigh_table() {
        // M = N = 1: X = lambda^2 |h|^4 |G|^4.
        assert_eq!(expected_x(1, 1, 1.0, 1.0, 1.0), rayleigh(2, 1.0) * rayleigh(2, 1.0));
        assert_eq!(expected_x(1, 1, 1.0, 1.0, 1.0), 4.0);
        assert_eq!(expected_x2(1, 1, 1.0, 1.0, 1.0, Variant::Printed), 576.0);
        assert_eq!(expected_x2(1, 1, 1.0, 1.0, 1.0, Variant::Corrected), rayleigh(4, 1.0).powi(2));
        // E[Z] = lambda_j^2 E|h_k|^2 E|h_j|^2 E|G|^4.
        assert_relative_eq!(expected_z(1, 1, 1.0, 1.0, &[one(0.5, 1.0)]), 0.5 * rayleigh(2, 1.0), max_relative = 1e-15);
        assert_relative_eq!(expected_z(1, 1, 1.0, 1.0, &[one(0.5, 1.0)]), 1.0, max_relative = 1e-15);
        // E[Z^2] = lambda_j^4 E|h_k|^4 E|h_j|^4 E|G|^8.
        for v in [Variant::Printed, Variant::Corrected] {
            assert_relative_eq!(expected_z2(1, 1, 1.0, 1.0, &[one(0.5, 1.0)], v), 24.0, max_relative = 1e-14);
        }
        assert_eq!(coeff_a(1, 1) / 4.0, 12.0);
        assert_eq!(expected_t1(1, 1, 1.0, 1.0, 1.0), 2.0 * 2.0 * 24.0);
        assert_eq!(expected_t2(1, 1, 1.0, 1.0, 1.0, 1.0), 2.0 * 24.0);
    }

    #[test]
    fn cross_moment_printed_vs_product_oracle() {
        let i = [one(0.5, 1.0)];
        let lam = 0.5f64.sqrt();
        assert_eq!(coeff_c(1, 1, Variant::Printed), 108.0);
        assert_relative_eq!(expected_xz(1, 1, lam, 1.0, 1.0, &i, Variant::Printed), 27.0, max_relative = 1e-14);
        // lambda_k^2 lambda_j^2 E|h_k|^6 E|h_j|^2 E|G|^8
        let oracle = 0.25 * rayleigh(3, 1.0) * rayleigh(1, 1.0) * rayleigh(4, 1.0);
        assert_eq!(oracle, 36.0);
        assert_relative_eq!(expected_xz(1, 1, lam, 1.0, 1.0, &i, Variant::Corrected), oracle, max_relative = 1e-14);
        // E[X] = 4 lambda_k^2 = 2, E[Z] = 1.
        assert_relative_eq!(cov_xy(36.0, 2.0, 1.0), 34.0);
    }

    #[test]
    fn printed_c_is_short_by_36mn() {
        for m in 1..12 {
            for n in 1..40 {
                let d = coeff_c(m, n, Variant::Corrected) - coeff_c(m, n, Variant::Printed);
                assert_eq!(d, (36 * m * n) as f64);
            }
        }
    }

    #[test]
    fn reference_arithmetic() {
        assert_relative_eq!(expected_x(8, 50, 0.1f64.sqrt(), 1.0, 1.0), 18360.0, max_relative = 1e-14);
    }

    #[test]
    fn y_moments() {
        assert_eq!((expected_y(0.0, 2.0), expected_y2(0.0, 0.0, 2.0)), (2.0, 4.0));
        assert_eq!((expected_y(1.0, 1.0), expected_y2(1.0, 24.0, 1.0)), (2.0, 27.0));
        assert_eq!((expected_y(3.0, 0.0), expected_y2(3.0, 11.0, 0.0)), (3.0, 11.0));
    }

    #[test]
    fn no_interferers_gives_zero() {
        assert_eq!(expected_z(3, 4, 1.0, 1.0, &[]), 0.0);
        assert_eq!(expected_z2(3, 4, 1.0, 1.0, &[], Variant::Corrected), 0.0);
        assert_eq!(expected_xz(3, 4, 1.0, 1.0, 1.0, &[], Variant::Corrected), 0.0);
        assert_eq!(cov_xy(0.0, 5.0, 0.0), 0.0);
        assert_eq!(cov_xy(6.0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn printed_x2_polynomial_is_exact_at_unit_source_gain() {
        for m in 1..10 {
            for n in 1..60 {
                assert_eq!(
                    expected_x2(m, n, 1.0, 1.0, 1.0, Variant::Printed),
                    expected_x2(m, n, 1.0, 1.0, 1.0, Variant::Corrected),
                    "M={m} N={n}"
                );
            }
        }
    }

    #[test]
    fn printed_x2_breaks_homogeneity_only_when_48_term_is_live() {
        let c = 0.3;
        for (m, n) in [(1, 5), (2, 5), (3, 1)] {
            let base = expected_x2(m, n, 1.0, 1.0, 1.0, Variant::Printed);
            assert_relative_eq!(expected_x2(m, n, 1.0, 1.0, c, Variant::Printed), c.powi(4) * base, max_relative = 1e-13);
        }
        let base = expected_x2(3, 2, 1.0, 1.0, 1.0, Variant::Printed);
        let scaled = expected_x2(3, 2, 1.0, 1.0, c, Variant::Printed);
        assert!((scaled / (c.powi(4) * base) - 1.0).abs() > 1e-3);
    }

    #[test]
    fn printed_b_matches_corrected_only_for_one_antenna() {
        for n in 1..30 {
            assert_relative_eq!(coeff_b(1, n, Variant::Printed), coeff_b(1, n, Variant::Corrected), max_relative = 1e-14);
        }
        for m in 2..8 {
            for n in 1..30 {
                let ratio = coeff_b(m, n, Variant::Printed) / coeff_b(m, n, Variant::Corrected);
                let expected = ((m + n) as f64 / (n + 1) as f64).powi(2);
                assert_relative_eq!(ratio, expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn large_arrays_stay_finite() {
        let links = UserLinks {
            antennas: 64,
            elements: 2000,
            lambda: 0.1,
            alpha_r: 1e-4,
            alpha_sr: 0.04,
            interferers: vec![one(0.01, 2e-4); 99],
        };
        let ms = MomentSet::closed_form(&links, 4.0, 1e-13, Forms::CORRECTED);
        assert!(ms.is_consistent(), "{ms:?}");
    }

    #[test]
    fn empty_interference_moment_set() {
        let links = UserLinks {
            antennas: 2,
            elements: 3,
            lambda: 1.0,
            alpha_r: 1.0,
            alpha_sr: 1.0,
            interferers: vec![],
        };
        let ms = MomentSet::closed_form(&links, 1.0, 0.5, Forms::CORRECTED);
        assert_eq!((ms.ez, ms.ez2, ms.exz, ms.cov_xy), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((ms.ey, ms.ey2), (0.5, 0.25));
    }

    fn interferer_list() -> impl Strategy<Value = Vec<Interferer>> {
        prop::collection::vec((0.05f64..1.0, 0.01f64..10.0), 1..6)
            .prop_map(|v| v.into_iter().map(|(l, a)| Interferer { lambda: l, alpha_r: a }).collect())
    }

    proptest! {
        #[test]
        fn homogeneity_in_pathloss(
            m in 1usize..6, n in 1usize..12,
            ark in 0.01f64..10.0, asr in 0.01f64..10.0,
            c in 0.1f64..10.0,
            intf in interferer_list(),
        ) {
            let v = Variant::Corrected;
            let rel = 1e-11;
            let ex = expected_x(m, n, 0.7, ark, asr);
            prop_assert!((expected_x(m, n, 0.7, ark, c * asr) / (c.powi(2) * ex) - 1.0).abs() < rel);
            prop_assert!((expected_x(m, n, 0.7, c * ark, asr) / (c.powi(2) * ex) - 1.0).abs() < rel);
            let ex2 = expected_x2(m, n, 0.7, ark, asr, v);
            prop_assert!((expected_x2(m, n, 0.7, ark, c * asr, v) / (c.powi(4) * ex2) - 1.0).abs() < rel);
            let ez = expected_z(m, n, asr, ark, &intf);
            prop_assert!((expected_z(m, n, c * asr, ark, &intf) / (c.powi(2) * ez) - 1.0).abs() < rel);
            prop_assert!((expected_z(m, n, asr, c * ark, &intf) / (c * ez) - 1.0).abs() < rel);
            let ez2 = expected_z2(m, n, asr, ark, &intf, v);
            prop_assert!((expected_z2(m, n, c * asr, ark, &intf, v) / (c.powi(4) * ez2) - 1.0).abs() < rel);
            prop_assert!((expected_z2(m, n, asr, c * ark, &intf, v) / (c.powi(2) * ez2) - 1.0).abs() < rel);
            let scaled: Vec<_> = intf.iter().map(|i| Interferer { alpha_r: c * i.alpha_r, ..*i }).collect();
            prop_assert!((expected_z2(m, n, asr, ark, &scaled, v) / (c.powi(2) * ez2) - 1.0).abs() < rel);
            let exz = expected_xz(m, n, 0.7, ark, asr, &intf, v);
            prop_assert!((expected_xz(m, n, 0.7, ark, c * asr, &intf, v) / (c.powi(4) * exz) - 1.0).abs() < rel);
            prop_assert!((expected_xz(m, n, 0.7, c * ark, asr, &intf, v) / (c.powi(3) * exz) - 1.0).abs() < rel);
        }

        #[test]
        fn z2_invariant_under_interferer_permutation(
            m in 1usize..6, n in 1usize..12,
            intf in interferer_list(),
            rot in 0usize..6,
        ) {
            let mut perm = intf.clone();
            perm.reverse();
            let len = perm.len();
            perm.rotate_left(rot % len);
            for v in [Variant::Printed, Variant::Corrected] {
                let a = expected_z2(m, n, 0.3, 2.0, &intf, v);
                let b = expected_z2(m, n, 0.3, 2.0, &perm, v);
                prop_assert!((a / b - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn corrected_z2_equals_term_expansion(
            m in 1usize..8, n in 1usize..20,
            ark in 0.01f64..10.0, asr in 0.01f64..10.0,
            intf in interferer_list(),
        ) {
            let a = expected_z2(m, n, asr, ark, &intf, Variant::Corrected);
            let b = expected_z2_from_terms(m, n, asr, ark, &intf);
            prop_assert!((a / b - 1.0).abs() < 1e-11);
        }

        #[test]
        fn single_interferer_reduction(
            m in 1usize..8, n in 1usize..20,
            ark in 0.01f64..10.0, asr in 0.01f64..10.0, arj in 0.01f64..10.0,
            lam in 0.05f64..1.0,
        ) {
            let i = [Interferer { lambda: lam, alpha_r: arj }];
            let z2 = expected_z2(m, n, asr, ark, &i, Variant::Corrected);
            let t1 = lam.powi(4) * expected_t1(m, n, asr, ark, arj);
            prop_assert!((z2 / t1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn jensen_holds(m in 1usize..10, n in 1usize..100, intf in interferer_list()) {
            let links = UserLinks { antennas: m, elements: n, lambda: 0.4, alpha_r: 0.2, alpha_sr: 0.5, interferers: intf };
            for forms in [Forms::CORRECTED, Forms::PRINTED] {
                let ms = MomentSet::closed_form(&links, 3.0, 0.01, forms);
                prop_assert!(ms.ex2 >= ms.ex * ms.ex);
                prop_assert!(ms.ez2 >= ms.ez * ms.ez);
                prop_assert!(ms.ey2 >= ms.ey * ms.ey);
            }
        }
    }
}
