use wedgegreen_core::bounds::Preset;
use wedgegreen_core::Result;

/// Equation labels accepted as preset aliases.
const ALIASES: [(&str, Preset); 16] = [
    ("May0", Preset::WholeSpace),
    ("May0'", Preset::WholeSpaceTime),
    ("May0s", Preset::WholeSpaceTime),
    ("Apr19", Preset::WeightCommutator),
    ("Apr19'", Preset::WeightCommutatorTime),
    ("Apr19s", Preset::WeightCommutatorTime),
    ("May3", Preset::Dirichlet),
    ("May4", Preset::DirichletTime),
    ("Ap1a", Preset::Oblique),
    ("May34", Preset::ObliqueTime),
    ("Feb23", Preset::ObliqueDifference),
    ("Feb23a", Preset::ObliqueDifferenceTime),
    ("L_p", Preset::OperatorHypothesis),
    ("Lp", Preset::OperatorHypothesis),
    ("L_p_1", Preset::ShortTimeHypothesis),
    ("Lp1", Preset::ShortTimeHypothesis),
];

pub fn parse_preset(name: &str) -> Result<Preset> {
    match ALIASES.iter().find(|(a, _)| *a == name) {
        Some((_, p)) => Ok(*p),
        None => Preset::parse(name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_and_role_names() {
        assert_eq!(parse_preset("May3").unwrap(), Preset::Dirichlet);
        assert_eq!(parse_preset("Feb23a").unwrap(), Preset::ObliqueDifferenceTime);
        assert_eq!(parse_preset("dirichlet").unwrap(), Preset::Dirichlet);
        assert!(parse_preset("May5").is_err());
    }
}
