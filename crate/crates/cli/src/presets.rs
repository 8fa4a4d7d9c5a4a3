//! Named experiments at desk and paper scale. Every preset resolves to a
//! complete [`ExperimentConfig`]; nothing is filled in later.

use semiloc_core::lattice::Boundary;
use semiloc_core::transport::Integrator;

use crate::config::*;
use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20240601;

pub const PRESET_NAMES: &[&str] = &[
    "fig1c",
    "fig2a",
    "fig2bc",
    "fig2d",
    "fig3a",
    "fig3b",
    "fig4a",
    "fig4b",
    "appendixD",
    "fgr-check",
    "tail-check",
];

fn system(dimension: usize, boundary: Boundary, hopping: f64) -> System {
    System {
        dimension,
        boundary,
        hopping,
        detuning: 0.0,
    }
}

fn cubic() -> System {
    system(3, Boundary::Periodic, 1.0)
}

fn config(name: &str, scale: Scale, realizations: u64, experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        scale,
        seed: DEFAULT_SEED,
        realizations,
        raw: false,
        threads: None,
        output_dir: None,
        experiment,
    }
}

fn pick<T>(scale: Scale, desk: T, paper: T) -> T {
    match scale {
        Scale::Desk => desk,
        Scale::Paper => paper,
    }
}

const IPR_DISORDERS: &[f64] = &[2.0, 5.0, 10.0, 16.5, 25.0, 40.0, 60.0, 100.0, 175.0, 300.0];

pub fn preset(name: &str, scale: Scale) -> Result<ExperimentConfig, CliError> {
    let desk = scale == Scale::Desk;
    let cfg = match name {
        "fig1c" => config(
            name,
            scale,
            2000,
            Experiment::Tail(TailParams {
                system: system(1, Boundary::Periodic, 1.0),
                length: 100,
                disorder: 25.0,
                couplings: vec![0.0, 1.0, 2.0, 5.0, 10.0, 50.0],
                origin: Origin::Center,
                tail_from: 15.0,
            }),
        ),
        "fig2a" => config(
            name,
            scale,
            pick(scale, 30, 100),
            Experiment::ReturnProbability(ReturnProbabilityParams {
                system: cubic(),
                lengths: vec![pick(scale, 11, 15)],
                disorders: if desk {
                    vec![5.0, 10.0, 25.0, 40.0, 60.0, 80.0, 100.0]
                } else {
                    vec![2.0, 5.0, 10.0, 16.5, 25.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0]
                },
                couplings: if desk { vec![0.0, 50.0] } else { vec![0.0, 30.0, 50.0] },
                origin: Origin::Center,
            }),
        ),
        "fig2bc" => config(
            name,
            scale,
            pick(scale, 10, 100),
            Experiment::IprMap(IprMapParams {
                system: cubic(),
                length: pick(scale, 10, 15),
                disorders: if desk {
                    IPR_DISORDERS.to_vec()
                } else {
                    let mut v = IPR_DISORDERS.to_vec();
                    v.extend([500.0, 1000.0]);
                    v
                },
                couplings: vec![0.0, 30.0],
                bin_width: 0.02,
            }),
        ),
        "fig2d" => config(
            name,
            scale,
            pick(scale, 20, 100),
            Experiment::IprScaling(IprScalingParams {
                system: cubic(),
                lengths: if desk { vec![8, 10, 12] } else { vec![8, 10, 12, 14, 16] },
                coupling: 30.0,
                points: vec![
                    ScalingPoint { disorder: 5.0, epsilon: 0.5 },
                    ScalingPoint { disorder: 175.0, epsilon: 0.5 },
                    ScalingPoint { disorder: 175.0, epsilon: 0.9 },
                ],
                bin_width: 0.02,
            }),
        ),
        "fig3a" => config(
            name,
            scale,
            pick(scale, 50, 200),
            Experiment::Spacing(SpacingParams {
                system: cubic(),
                length: pick(scale, 10, 15),
                coupling: 30.0,
                regimes: vec![
                    SpacingRegime {
                        label: "delocalized".into(),
                        disorder: 5.0,
                        window: (0.45, 0.55),
                    },
                    SpacingRegime {
                        label: "semilocalized".into(),
                        disorder: 175.0,
                        window: (0.45, 0.55),
                    },
                    SpacingRegime {
                        label: "localized".into(),
                        disorder: 175.0,
                        window: (0.85, 0.95),
                    },
                ],
                histogram_bins: 40,
                histogram_max: 4.0,
            }),
        ),
        "fig3b" => config(
            name,
            scale,
            pick(scale, 50, 100),
            Experiment::Deviation(DeviationParams {
                system: if desk {
                    system(1, Boundary::Periodic, 0.0)
                } else {
                    cubic()
                },
                length: pick(scale, 1000, 10),
                disorders: vec![5.0, 10.0, 20.0, 30.0, 40.0, 60.0, 100.0, 200.0, 300.0, 500.0, 1000.0],
                coupling: 30.0,
            }),
        ),
        "fig4a" => config(
            name,
            scale,
            100,
            Experiment::Transport(TransportParams {
                system: system(1, Boundary::Open, 1.0),
                lengths: if desk {
                    vec![10, 20, 40, 80]
                } else {
                    vec![10, 20, 40, 80, 160, 320, 640, 1280]
                },
                disorder: 10.0,
                couplings: vec![30.0, 0.0],
                gamma: 0.05,
                window: pick(scale, (200.0, 400.0), (1000.0, 2000.0)),
                sample_step: 0.1,
                integrator: Integrator::Kernel,
            }),
        ),
        "fig4b" => config(
            name,
            scale,
            pick(scale, 50, 200),
            Experiment::Diffusion(DiffusionParams {
                system: system(1, Boundary::Open, 1.0),
                lengths: vec![400],
                disorder: 30.0,
                couplings: vec![50.0, 0.0],
                origin: Origin::Center,
                t_end: 100.0,
                time_points: 1001,
                plateau_from: 0.5,
                plateau_fraction: 0.4,
                window_ratio: 5.0,
            }),
        ),
        "appendixD" => config(
            name,
            scale,
            pick(scale, 20, 100),
            Experiment::ReturnProbability(ReturnProbabilityParams {
                system: system(1, Boundary::Periodic, 1.0),
                lengths: if desk { vec![200, 400, 800] } else { vec![500, 1000, 2000] },
                disorders: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0, 100.0],
                couplings: vec![0.0, 50.0],
                origin: Origin::Center,
            }),
        ),
        "fgr-check" => config(
            name,
            scale,
            pick(scale, 10, 50),
            Experiment::FgrCheck(FgrCheckParams {
                n: 2000,
                disorder: 10.0,
                coupling: 2.0,
                detuning: 0.0,
                site_band: (0.15, 0.35),
                max_sites: pick(scale, 20, 100),
                t_start: 2.0,
                t_end: 20.0,
                time_points: 181,
            }),
        ),
        "tail-check" => config(
            name,
            scale,
            1,
            Experiment::TailCheck(TailCheckParams {
                cases: vec![
                    TailCase { coupling: 1.0, disorder: 25.0, n: 100 },
                    TailCase { coupling: 2.0, disorder: 25.0, n: 100 },
                    TailCase { coupling: 5.0, disorder: 25.0, n: 100 },
                    TailCase { coupling: 30.0, disorder: 60.0, n: 1000 },
                ],
                epsilons: vec![1e-2, 1e-3, 1e-4, 1e-5],
                log_scale: 0.25,
            }),
        ),
        other => {
            return Err(CliError::Config(format!(
                "preset: unknown name {other:?}; known: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}
