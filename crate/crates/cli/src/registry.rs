//! The experiments a run configuration may name, with their parameters
//! and defaults.

use knlab_core::experiments::{EPS_GRID, K_LADDER};

use crate::config::ExperimentSpec;

pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    defaults: fn() -> ExperimentSpec,
}

impl ExperimentInfo {
    /// Every accepted key set to its default. `families` defaults to the
    /// run-level family list and is shown here as empty.
    pub fn defaults(&self) -> ExperimentSpec {
        (self.defaults)()
    }

    /// `key = default` lines for the listing.
    pub fn schema(&self) -> Vec<String> {
        let d = self.defaults();
        let mut out = Vec::new();
        let table = toml::Table::try_from(&d).expect("defaults serialize");
        for key in d.keys() {
            let text = if key == "families" {
                "<run families>".to_string()
            } else {
                table[key].to_string()
            };
            out.push(format!("{key} = {text}"));
        }
        out
    }
}

fn ladder() -> Option<Vec<usize>> {
    Some(K_LADDER.to_vec())
}

fn families() -> Option<Vec<knlab_core::experiments::Ladder>> {
    Some(Vec::new())
}

fn spec(name: &str) -> ExperimentSpec {
    ExperimentSpec::named(name)
}

/// Sorted by name.
pub const REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "cs-determinant",
        summary: "Carleson-Sjolin determinant over the sphere probe grid and a degenerate phase",
        defaults: || ExperimentSpec {
            grid: Some(20),
            ..spec("cs-determinant")
        },
    },
    ExperimentInfo {
        name: "delta-table",
        summary: "critical exponent delta(p) at p in {2, 3, 4, 6, 8, inf}",
        defaults: || spec("delta-table"),
    },
    ExperimentInfo {
        name: "equator-restriction",
        summary: "scaling of the L2 restriction of Q_k to an equatorial unit arc",
        defaults: || ExperimentSpec {
            k_range: ladder(),
            ..spec("equator-restriction")
        },
    },
    ExperimentInfo {
        name: "gauss-lemma",
        summary: "Gauss lemma residuals on the round and perturbed spheres at seeded configurations",
        defaults: || ExperimentSpec {
            count: Some(50),
            ..spec("gauss-lemma")
        },
    },
    ExperimentInfo {
        name: "gram-norm",
        summary: "almost-orthogonality Gram norm for separated and coincident points",
        defaults: || ExperimentSpec {
            lambdas: Some(vec![400.0, 1600.0, 6400.0]),
            count: Some(32),
            coincident: Some(vec![4, 8, 16, 32]),
            ..spec("gram-norm")
        },
    },
    ExperimentInfo {
        name: "holder-chain",
        summary: "KN^(1/2) <= Vol^(1/4) ||e||_4 over every evaluated (field, tube) pair",
        defaults: || ExperimentSpec {
            k_range: ladder(),
            families: families(),
            ..spec("holder-chain")
        },
    },
    ExperimentInfo {
        name: "kernel-decay",
        summary: "bilinear kernel decay away from the diagonal and row-integral scaling",
        defaults: || ExperimentSpec {
            lambda: Some(100.0),
            ns: Some(vec![2, 4, 8]),
            ..spec("kernel-decay")
        },
    },
    ExperimentInfo {
        name: "kn-maximal",
        summary: "Kakeya-Nikodym maximal tube mass over the k-ladder",
        defaults: || ExperimentSpec {
            k_range: ladder(),
            families: families(),
            ..spec("kn-maximal")
        },
    },
    ExperimentInfo {
        name: "lp-scaling",
        summary: "fitted exponent of ||e||_p against lambda",
        defaults: || ExperimentSpec {
            ps: Some(vec![3.0, 4.0, 6.0]),
            k_range: ladder(),
            families: families(),
            ..spec("lp-scaling")
        },
    },
    ExperimentInfo {
        name: "prop3-torus",
        summary: "restriction decay of torus plane waves along non-closed geodesics",
        defaults: || ExperimentSpec {
            ns: Some(vec![8, 16, 32, 64, 128, 256]),
            slopes: Some(vec![(1.0 + 5f64.sqrt()) / 2.0, std::f64::consts::SQRT_2, 1.0]),
            ..spec("prop3-torus")
        },
    },
    ExperimentInfo {
        name: "tube-concentration",
        summary: "mass of Q_k in the lambda^(-1/2) tube about the equator",
        defaults: || ExperimentSpec {
            k_range: ladder(),
            ..spec("tube-concentration")
        },
    },
    ExperimentInfo {
        name: "verify-bourgain",
        summary: "sup of geodesic restrictions against lambda^(1/p) ||e||_p^2",
        defaults: || ExperimentSpec {
            p: Some(4.0),
            k_range: ladder(),
            families: families(),
            ..spec("verify-bourgain")
        },
    },
    ExperimentInfo {
        name: "verify-corollary2",
        summary: "trend classification of restriction, KN and L^p growth per family",
        defaults: || ExperimentSpec {
            p: Some(4.0),
            k_range: ladder(),
            families: families(),
            ..spec("verify-corollary2")
        },
    },
    ExperimentInfo {
        name: "verify-estimate1",
        summary: "lambda^(-delta(p)) ||e||_p stays bounded",
        defaults: || ExperimentSpec {
            p: Some(4.0),
            k_range: ladder(),
            families: families(),
            ..spec("verify-estimate1")
        },
    },
    ExperimentInfo {
        name: "verify-theorem1",
        summary: "L4 bound by the Kakeya-Nikodym norm with the least constant per epsilon",
        defaults: || ExperimentSpec {
            k_range: ladder(),
            eps_grid: Some(EPS_GRID.to_vec()),
            families: families(),
            ..spec("verify-theorem1")
        },
    },
    ExperimentInfo {
        name: "zonal-sup",
        summary: "sup norm of zonal harmonics against sqrt((2k+1)/4pi)",
        defaults: || ExperimentSpec {
            k_range: Some(vec![10, 20, 40]),
            ..spec("zonal-sup")
        },
    },
];

pub fn lookup(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// Range checks on the values that are set; `Err((key, message))`.
pub fn check_params(spec: &ExperimentSpec) -> Result<(), (&'static str, String)> {
    let trend_ladder = !matches!(spec.name.as_str(), "zonal-sup" | "holder-chain" | "kn-maximal");
    if let Some(ks) = &spec.k_range {
        if ks.contains(&0) {
            return Err(("k_range", "degrees must be positive".into()));
        }
        let min = if trend_ladder { 5 } else { 1 };
        if ks.len() < min {
            return Err(("k_range", format!("needs at least {min} degrees, got {}", ks.len())));
        }
    }
    if let Some(p) = spec.p {
        if spec.name == "verify-corollary2" {
            if !(p > 2.0 && p < 6.0) {
                return Err(("p", format!("must lie in (2, 6), got {p}")));
            }
        } else if p.is_nan() || p < 2.0 {
            return Err(("p", format!("must be at least 2, got {p}")));
        }
    }
    if let Some(ps) = &spec.ps {
        if ps.is_empty() || ps.iter().any(|p| p.is_nan() || *p < 2.0) {
            return Err(("ps", "exponents must be at least 2".into()));
        }
    }
    if let Some(eps) = &spec.eps_grid {
        if eps.is_empty() || eps.iter().any(|e| e.is_nan() || *e <= 0.0 || *e > 1.0) {
            return Err(("eps_grid", "values must lie in (0, 1]".into()));
        }
    }
    if let Some(ns) = &spec.ns {
        let min = if spec.name == "prop3-torus" { 5 } else { 1 };
        if ns.len() < min || ns.iter().any(|&n| n < 1) {
            return Err(("ns", format!("needs at least {min} positive entries")));
        }
    }
    if let Some(slopes) = &spec.slopes {
        if slopes.is_empty() || slopes.iter().any(|s| !s.is_finite()) {
            return Err(("slopes", "needs finite slopes".into()));
        }
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if let Some(l) = spec.lambda {
        if !positive(l) {
            return Err(("lambda", format!("must be positive, got {l}")));
        }
    }
    if let Some(ls) = &spec.lambdas {
        if ls.is_empty() || !ls.iter().all(|&l| positive(l)) {
            return Err(("lambdas", "values must be positive".into()));
        }
    }
    if spec.count == Some(0) {
        return Err(("count", "must be positive".into()));
    }
    if let Some(c) = &spec.coincident {
        if c.len() < 2 || c.contains(&0) {
            return Err(("coincident", "needs at least two positive counts".into()));
        }
    }
    if let Some(g) = spec.grid {
        if g < 2 {
            return Err(("grid", format!("needs at least 2 points per axis, got {g}")));
        }
    }
    if let Some(f) = &spec.families {
        if f.is_empty() && spec.name != "holder-chain" {
            return Err(("families", "must not be empty".into()));
        }
    }
    Ok(())
}
