//! Named simulation settings: a graphon, an outcome model and a default treatment probability.

use crate::graphon::{GraphonSpec, Profile};
use crate::outcomes::{OutcomeForm, OutcomeModel};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub graphon: GraphonSpec,
    pub outcome: OutcomeModel,
    pub pi: f64,
    /// Rank of the graphon, the default number of balanced components.
    pub rank: usize,
}

const NAMES: [&str; 11] = [
    "appendix_a_1",
    "appendix_a_2",
    "appendix_a_3",
    "appendix_a_4",
    "appendix_a_5",
    "appendix_a_6",
    "appendix_a_7",
    "appendix_a_8",
    "appendix_a_9",
    "appendix_a_10",
    "figure2_constant",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

fn sbm() -> GraphonSpec {
    GraphonSpec::BlockModel {
        breaks: vec![1.0 / 3.0, 2.0 / 3.0],
        within: 0.6,
        base: 0.2,
    }
}

fn cubic() -> GraphonSpec {
    let c = 27.0 / 4.0;
    GraphonSpec::Rank3Poly {
        coefficients: vec![c, -2.0 * c, c],
    }
}

fn step_min() -> GraphonSpec {
    GraphonSpec::StepMin {
        levels: 3,
        base: 0.25,
        step: 0.25,
    }
}

fn rank1(profile: Profile) -> GraphonSpec {
    GraphonSpec::Rank1Product { profile }
}

fn step_profile() -> Profile {
    Profile::Step {
        low: 0.3,
        high: 0.9,
        cut: 0.5,
    }
}

fn sine_profile() -> Profile {
    Profile::Sine {
        amplitude: 0.3,
        offset: 0.5,
    }
}

fn quartic_profile() -> Profile {
    Profile::Quartic {
        scale: 0.05,
        offset: 0.1,
    }
}

pub fn lookup(name: &str) -> Option<Preset> {
    use OutcomeForm::*;
    let (description, graphon, form, noise, pi, rank) = match name {
        "appendix_a_1" => ("three-block SBM, (w + u x)^2 / 2", sbm(), SquareMix, 0.2, 0.5, 3),
        "appendix_a_2" => ("cubic rank-3 kernel, cos(3 w x)", cubic(), Cos3, 0.2, 0.5, 3),
        "appendix_a_3" => ("cubic rank-3 kernel, -e^u cos(3 w x)", cubic(), NegExpCos, 0.2, 0.5, 3),
        "appendix_a_4" => ("step-min rank-3 kernel, (1 + w) e^x", step_min(), ExpLinear, 0.2, 0.5, 3),
        "appendix_a_5" => ("step-min rank-3 kernel, (1 + u)^2 (1 + w) e^x / 5", step_min(), PolyExp, 0.2, 0.5, 3),
        "appendix_a_6" => ("rank-1 step profile, (w + u x)^2 / 2", rank1(step_profile()), SquareMix, 0.2, 0.5, 1),
        "appendix_a_7" => ("rank-1 sine profile, cos(3 w x)", rank1(sine_profile()), Cos3, 0.2, 0.5, 1),
        "appendix_a_8" => ("rank-1 sine profile, -e^u cos(3 w x)", rank1(sine_profile()), NegExpCos, 0.2, 0.5, 1),
        "appendix_a_9" => ("rank-1 quartic profile, (1 + w) e^x", rank1(quartic_profile()), ExpLinear, 0.2, 0.5, 1),
        "appendix_a_10" => (
            "rank-1 quartic profile, (1 + u)^2 (1 + w) e^x / 5",
            rank1(quartic_profile()),
            PolyExp,
            0.2,
            0.5,
            1,
        ),
        "figure2_constant" => (
            "constant kernel 0.4, w x / pi^2 with unit noise",
            GraphonSpec::Constant { value: 0.4 },
            Figure2 { pi: 0.7 },
            1.0,
            0.7,
            1,
        ),
        _ => return None,
    };
    let name = NAMES.iter().copied().find(|n| *n == name)?;
    Some(Preset {
        name,
        description,
        graphon,
        outcome: OutcomeModel::from_form(form, noise).expect("preset outcome is valid"),
        pi,
        rank,
    })
}
