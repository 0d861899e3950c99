//! Turns a validated scenario into spectrum, model space and potential.

use bsbloch::model::{ModelSpace, Orbital, Spectrum};
use bsbloch::potential::{EnergyDependentPotential, PhotonKernel, PotentialTerm, Profile};
use bsbloch::toys::ensemble_instance;
use bsbloch::{gauss_legendre, Matrix, Scalar};
use num_complex::Complex64;

use crate::config::{MatrixSpec, OrbitalSpec, ProfileSpec, ScenarioConfig, TermSpec};
use crate::error::CliError;

pub struct System<T: Scalar> {
    pub spectrum: Spectrum<T>,
    pub model: ModelSpace<T>,
    pub potential: EnergyDependentPotential<T>,
    /// Default energy window for brackets and oracle scans.
    pub window: (f64, f64),
}

/// Complex arithmetic is needed once any photon term carries damping.
pub fn needs_complex(cfg: &ScenarioConfig) -> bool {
    cfg.potential
        .iter()
        .any(|t| matches!(t, TermSpec::Photon { gamma, .. } if *gamma > 0.0))
}

pub enum AnySystem {
    Real(System<f64>),
    Complex(System<Complex64>),
}

/// Generated ensembles are always real; explicit scenarios switch to complex
/// arithmetic when a photon term is damped.
pub fn build(cfg: &ScenarioConfig, seed: u64) -> Result<AnySystem, CliError> {
    let sp = &cfg.spectrum;
    let sources = usize::from(sp.diagonal.is_some()) + usize::from(sp.tensor.is_some()) + usize::from(sp.ensemble);
    if sources != 1 {
        return Err(CliError::config("spectrum", "set exactly one of diagonal, tensor or ensemble"));
    }
    if sp.ensemble {
        if !cfg.potential.is_empty() {
            return Err(CliError::config("potential", "generated ensembles bring their own potential"));
        }
        if !cfg.model.is_empty() {
            return Err(CliError::config("model", "generated ensembles bring their own model space"));
        }
        let inst = ensemble_instance(seed).map_err(|e| CliError::solver("ensemble generation", e))?;
        return Ok(AnySystem::Real(System {
            spectrum: inst.spectrum,
            model: inst.model,
            potential: inst.potential,
            window: inst.window,
        }));
    }
    if needs_complex(cfg) {
        Ok(AnySystem::Complex(build_explicit(cfg)?))
    } else {
        Ok(AnySystem::Real(build_explicit(cfg)?))
    }
}

fn build_explicit<T: Scalar<Real = f64>>(cfg: &ScenarioConfig) -> Result<System<T>, CliError> {
    let sp = &cfg.spectrum;
    let spectrum = match (&sp.diagonal, &sp.tensor) {
        (Some(h), _) => {
            if h.is_empty() {
                return Err(CliError::config("spectrum.diagonal", "must not be empty"));
            }
            if let Some(i) = h.iter().position(|x| !x.is_finite()) {
                return Err(CliError::config(format!("spectrum.diagonal[{i}]"), "must be finite"));
            }
            Spectrum::from_diagonal(h.iter().map(|&x| T::lit(x)).collect())
                .map_err(|e| CliError::config("spectrum.diagonal", e.to_string()))?
        }
        (None, Some(t)) => {
            let first = orbitals(&t.first, "spectrum.tensor.first")?;
            let second = orbitals(&t.second, "spectrum.tensor.second")?;
            Spectrum::tensor_h0(&first, &second).map_err(|e| CliError::config("spectrum.tensor", e.to_string()))?
        }
        (None, None) => unreachable!("source count checked above"),
    };
    let n = spectrum.len();

    if cfg.model.is_empty() {
        return Err(CliError::config("model", "needs at least one basis index"));
    }
    for (i, &k) in cfg.model.iter().enumerate() {
        if k >= n {
            return Err(CliError::config(
                format!("model[{i}]"),
                format!("index {k} out of range for a basis of size {n}"),
            ));
        }
        if cfg.model[..i].contains(&k) {
            return Err(CliError::config(format!("model[{i}]"), format!("index {k} repeated")));
        }
    }
    let model = ModelSpace::new(&spectrum, &cfg.model).map_err(|e| CliError::config("model", e.to_string()))?;

    let mut potential = EnergyDependentPotential::zero(n);
    for (i, term) in cfg.potential.iter().enumerate() {
        let t = build_term(term, &spectrum, n, &format!("potential[{i}]"))?;
        potential = potential
            .with_term(t)
            .map_err(|e| CliError::config(format!("potential[{i}]"), e.to_string()))?;
    }
    if cfg.no_pair {
        potential = potential
            .with_no_pair(&spectrum)
            .map_err(|e| CliError::config("no_pair", e.to_string()))?;
    }

    let energies: Vec<f64> = model.energies().iter().map(|e| e.re()).collect();
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(System {
        spectrum,
        model,
        potential,
        window: (lo - 0.5, hi + 0.5),
    })
}

fn orbitals(specs: &[OrbitalSpec], path: &str) -> Result<Vec<Orbital<f64>>, CliError> {
    if specs.is_empty() {
        return Err(CliError::config(path, "must not be empty"));
    }
    specs
        .iter()
        .enumerate()
        .map(|(i, o)| match *o {
            OrbitalSpec::Energy(e) if e.is_finite() => Ok(Orbital::new(i, e)),
            OrbitalSpec::Signed { energy, sign } if energy.is_finite() => {
                Orbital::with_sign(i, energy, sign).map_err(|e| CliError::config(format!("{path}[{i}].sign"), e.to_string()))
            }
            _ => Err(CliError::config(format!("{path}[{i}]"), "energy must be finite")),
        })
        .collect()
}

fn matrix<T: Scalar<Real = f64>>(spec: &MatrixSpec, n: usize, path: &str) -> Result<Matrix<T>, CliError> {
    let mut m = Matrix::zeros(n, n);
    match (&spec.matrix, &spec.entries) {
        (Some(rows), None) => {
            if rows.len() != n {
                return Err(CliError::config(format!("{path}.matrix"), format!("expected {n} rows, got {}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(CliError::config(
                        format!("{path}.matrix[{i}]"),
                        format!("expected {n} columns, got {}", row.len()),
                    ));
                }
                for (j, &x) in row.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(CliError::config(format!("{path}.matrix[{i}][{j}]"), "must be finite"));
                    }
                    m[(i, j)] = T::lit(x);
                }
            }
        }
        (None, Some(entries)) => {
            for (k, &(i, j, x)) in entries.iter().enumerate() {
                if i >= n || j >= n {
                    return Err(CliError::config(
                        format!("{path}.entries[{k}]"),
                        format!("index ({i}, {j}) out of range for a basis of size {n}"),
                    ));
                }
                if !x.is_finite() {
                    return Err(CliError::config(format!("{path}.entries[{k}]"), "must be finite"));
                }
                m[(i, j)] = T::lit(x);
                if spec.symmetric {
                    m[(j, i)] = T::lit(x);
                }
            }
        }
        _ => return Err(CliError::config(path, "set exactly one of matrix or entries")),
    }
    Ok(m)
}

fn build_term<T: Scalar<Real = f64>>(
    term: &TermSpec,
    spectrum: &Spectrum<T>,
    n: usize,
    path: &str,
) -> Result<PotentialTerm<T>, CliError> {
    Ok(match term {
        TermSpec::Constant { w } => PotentialTerm::Constant { w: matrix(w, n, path)? },
        TermSpec::Rational { w, pole, power } => {
            if !pole.is_finite() {
                return Err(CliError::config(format!("{path}.pole"), "must be finite"));
            }
            if *power == 0 {
                return Err(CliError::config(format!("{path}.power"), "must be at least 1"));
            }
            PotentialTerm::Rational {
                w: matrix(w, n, path)?,
                pole: T::lit(*pole),
                power: *power,
            }
        }
        TermSpec::Photon {
            w,
            nodes,
            kmin,
            kmax,
            profile,
            gamma,
        } => {
            if *nodes == 0 {
                return Err(CliError::config(format!("{path}.nodes"), "must be at least 1"));
            }
            if !(kmin < kmax) || !kmin.is_finite() || !kmax.is_finite() {
                return Err(CliError::config(format!("{path}.kmin"), format!("need kmin < kmax, got [{kmin}, {kmax}]")));
            }
            if !(*gamma >= 0.0) || !gamma.is_finite() {
                return Err(CliError::config(format!("{path}.gamma"), "must be finite and non-negative"));
            }
            if spectrum.orbital_pairs().is_none() {
                return Err(CliError::config(path, "photon terms need a tensor spectrum"));
            }
            let grid = gauss_legendre(*nodes, *kmin, *kmax).map_err(|e| CliError::config(path, e.to_string()))?;
            let profile = match *profile {
                ProfileSpec::Constant { value } => Profile::Constant { value },
                ProfileSpec::Gaussian { center, width } => Profile::Gaussian { center, width },
                ProfileSpec::Lorentzian { center, width } => Profile::Lorentzian { center, width },
            };
            let k = PhotonKernel::new(spectrum, grid, profile, matrix(w, n, path)?, *gamma)
                .map_err(|e| CliError::config(path, e.to_string()))?;
            PotentialTerm::Photon(k)
        }
    })
}
