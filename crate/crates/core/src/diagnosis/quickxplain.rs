/// Divide-and-conquer search for a minimal subset of `items` on which
/// `holds` is true.
///
/// `holds` must be monotone: if it is true for a set it is true for every
/// superset. Returns `None` when `holds(items)` is false. Among minimal
/// subsets the result prefers items that come earlier in `items`, and the
/// returned items keep their input order.
pub fn quick_xplain<T: Clone>(items: &[T], mut holds: impl FnMut(&[T]) -> bool) -> Option<Vec<T>> {
    if !holds(items) {
        return None;
    }
    if holds(&[]) {
        return Some(Vec::new());
    }
    let mut base = Vec::with_capacity(items.len());
    Some(split(&mut holds, &mut base, false, items))
}

fn split<T: Clone>(
    holds: &mut impl FnMut(&[T]) -> bool,
    base: &mut Vec<T>,
    base_changed: bool,
    candidates: &[T],
) -> Vec<T> {
    if base_changed && holds(base) {
        return Vec::new();
    }
    if candidates.len() == 1 {
        return candidates.to_vec();
    }
    let (first, second) = candidates.split_at(candidates.len() / 2);

    let mark = base.len();
    base.extend_from_slice(first);
    let from_second = split(holds, base, !first.is_empty(), second);
    base.truncate(mark);

    base.extend_from_slice(&from_second);
    let mut from_first = split(holds, base, !from_second.is_empty(), first);
    base.truncate(mark);

    from_first.extend(from_second);
    from_first
}
