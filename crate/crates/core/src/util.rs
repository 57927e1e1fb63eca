/// `⌈v⌉`, except that values within a relative `1e-9` of an integer round to
/// it. Keeps `⌈10 / 0.5⌉ = 20` when the quotient lands at `20.000000000004`.
pub(crate) fn ceil_snapped(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 * v.abs().max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        assert_eq!(ceil_snapped(10.0 / 0.5), 20);
        assert_eq!(ceil_snapped(3.0 / 0.1), 30);
        assert_eq!(ceil_snapped(21.0 / 0.7), 30);
        assert_eq!(ceil_snapped(15.0 / (0.25f64 * 0.25)), 240);
        assert_eq!(ceil_snapped(20.2), 21);
        assert_eq!(ceil_snapped(0.3), 1);
    }
}
