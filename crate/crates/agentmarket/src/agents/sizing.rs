use crate::money::Qty;

/// Half-up rounding; negatives and NaN map to zero, huge values saturate.
pub fn round_half_up(x: f64) -> Qty {
    if x.is_nan() || x <= 0.0 {
        0
    } else {
        (x + 0.5).floor() as Qty
    }
}

/// Desired quantity `desired`, clamped to `[0, floor(max_fraction × resource)]`
/// where `resource` is what the agent could trade (shares, or cash in shares).
pub fn size_rule(desired: f64, resource: Qty, max_fraction: f64) -> Qty {
    let cap = (max_fraction * resource as f64).floor() as Qty;
    round_half_up(desired).min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_and_rounds() {
        assert_eq!(size_rule(150.0, 1000, 0.1), 100);
        assert_eq!(size_rule(-5.0, 1000, 0.1), 0);
        assert_eq!(size_rule(37.6, 1000, 0.1), 38);
        assert_eq!(size_rule(37.5, 1000, 0.1), 38);
        assert_eq!(size_rule(37.4, 1000, 0.1), 37);
        assert_eq!(size_rule(f64::INFINITY, 999, 0.1), 99);
        assert_eq!(size_rule(f64::NAN, 999, 0.1), 0);
    }
}
