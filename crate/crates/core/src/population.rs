//! Population literals: a positive integer, `E(n,rho)` for `⌊E_n(ρ)⌋` or
//! `EE(n,rho)` for `⌊Ẽ_n(ρ)⌋`.

use crate::coalescent::standard_tetration_population;
use crate::error::{Error, Result};
use crate::limits::modified_tetration_population;
use crate::numerics::TowerReal;

pub fn parse_population(s: &str) -> Result<TowerReal> {
    let bad = || Error::TowerLiteral(s.to_string());
    let t = s.trim();
    if let Ok(v) = t.parse::<u64>() {
        return if v == 0 { Err(bad()) } else { TowerReal::from_f64(v as f64) };
    }
    let (standard, rest) = if let Some(r) = t.strip_prefix("EE(") {
        (true, r)
    } else if let Some(r) = t.strip_prefix("E(") {
        (false, r)
    } else {
        return Err(bad());
    };
    let inner = rest.strip_suffix(')').ok_or_else(bad)?;
    let (n, rho) = inner.split_once(',').ok_or_else(bad)?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    let rho: f64 = rho.trim().parse().map_err(|_| bad())?;
    if !rho.is_finite() {
        return Err(bad());
    }
    if standard {
        standard_tetration_population(n, rho)
    } else {
        modified_tetration_population(n, rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(parse_population("1").unwrap(), TowerReal::ONE);
        assert_eq!(parse_population("EE(3,0)").unwrap().to_f64(), 15.0);
        assert_eq!(parse_population(" E( 2 , 1 ) ").unwrap().to_f64(), 1.0);
        assert_eq!(parse_population("E(8,2)").unwrap().level(), 8);
        for s in ["0", "-3", "E(2)", "E(a,1)", "EE(3,0", "X(1,2)", "E(1,nan)", ""] {
            assert!(matches!(parse_population(s), Err(Error::TowerLiteral(_))), "{s}");
        }
    }
}
