//! Desk-scale experiment presets, one per plot panel, plus an N = 1000 showcase.

use crate::config::*;

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub description: String,
    /// Rough single-core wall time.
    pub runtime_estimate: &'static str,
    pub config: ExperimentConfig,
}

const LADDER: [usize; 3] = [50, 100, 200];

fn compare(alpha: f64, beta: f64, family: FamilyName, q0: f64, time: TimeGrid, n3_clock: bool) -> ExperimentConfig {
    ExperimentConfig {
        command: Some(Command::Compare),
        seed: 2024,
        reps: 100,
        params: ParamsBlock {
            alpha,
            beta,
            n_servers: LADDER.to_vec(),
            regime_exponent: 1.0,
        },
        init: InitBlock {
            family,
            q0,
            endpoint: None,
            kappa: None,
            scaling: Default::default(),
        },
        time,
        output: OutputBlock::default(),
        overlay: OverlayBlock { n3_clock },
        extremal: None,
        bounds: None,
        validate: None,
    }
}

fn grid(stop: f64, step: f64) -> TimeGrid {
    TimeGrid {
        points: None,
        start: 0.0,
        stop,
        step,
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "")
}

/// All presets in a fixed order.
pub fn preset_figures() -> Vec<Preset> {
    let mut out = Vec::new();
    for (alpha, beta) in [(1.0, 1.0), (1.0, 10.0), (1.0, 100.0)] {
        for q0 in [0.0, 0.6, 0.75, 1.0] {
            let family = if q0 == 0.0 { FamilyName::Zero } else { FamilyName::Exponential };
            out.push(Preset {
                name: format!("fig2-a{}-b{}-q{}", tag(alpha), tag(beta), tag(q0)),
                description: format!(
                    "maximum queue vs the fluid limit q(t), alpha={alpha}, beta={beta}, q(0)={q0}, exponential start"
                ),
                runtime_estimate: "about 1 minute",
                config: compare(alpha, beta, family, q0, grid(1.0, 0.05), false),
            });
        }
    }
    for (alpha, beta) in [(1.0, 1.0), (1.0, 10.0), (1.0, 100.0)] {
        out.push(Preset {
            name: format!("fig3-a{}-b{}", tag(alpha), tag(beta)),
            description: format!(
                "maximum queue with the N^3 ln N clock curve and steady-state overlay, alpha={alpha}, beta={beta}"
            ),
            runtime_estimate: "about 1 minute",
            config: compare(alpha, beta, FamilyName::Zero, 0.0, grid(1.0, 0.05), true),
        });
        out.push(Preset {
            name: format!("fig4-a{}-b{}", tag(alpha), tag(beta)),
            description: format!("same runs against the fluid limit q(t), alpha={alpha}, beta={beta}"),
            runtime_estimate: "about 1 minute",
            config: compare(alpha, beta, FamilyName::Zero, 0.0, grid(1.0, 0.05), false),
        });
    }
    for (alpha, beta) in [(1.0, 1.0), (1.0, 10.0)] {
        out.push(Preset {
            name: format!("fig5-a{}-b{}-zoom", tag(alpha), tag(beta)),
            description: format!("small-t zoom with N^3 ln N clock overlay, alpha={alpha}, beta={beta}"),
            runtime_estimate: "a few seconds",
            config: compare(alpha, beta, FamilyName::Zero, 0.0, grid(0.02, 0.001), true),
        });
    }
    let mut showcase = compare(1.0, 1.0, FamilyName::Zero, 0.0, grid(1.0, 0.05), true);
    showcase.params.n_servers = vec![1000];
    showcase.reps = 1;
    out.push(Preset {
        name: "showcase-n1000".into(),
        description: "single replication at N=1000 over t in [0, 1]: about 1.4e10 queue events".into(),
        runtime_estimate: "3 to 5 minutes on one core",
        config: showcase,
    });
    out
}

pub fn find(name: &str) -> Option<Preset> {
    preset_figures().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_stay_desk_scale() {
        let ps = preset_figures();
        assert_eq!(ps.len(), 12 + 6 + 2 + 1);
        for p in &ps {
            let c = p.config.clone().resolve(Command::Compare, &Overrides::default()).unwrap();
            if p.name != "showcase-n1000" {
                assert!(c.params.n_servers.iter().all(|&n| n <= 200), "{}", p.name);
                assert!(c.reps >= 100, "{}", p.name);
            }
        }
        let names: std::collections::HashSet<_> = ps.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names.len(), ps.len());
    }

    #[test]
    fn lookup() {
        assert!(find("fig2-a1-b1-q06").is_some());
        assert!(find("fig3-a1-b100").unwrap().config.overlay.n3_clock);
        assert!(find("nope").is_none());
    }
}
