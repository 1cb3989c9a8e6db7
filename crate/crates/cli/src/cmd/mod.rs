pub mod construct;
pub mod count;
pub mod hitting;
pub mod search;
pub mod spread;
pub mod verify;

/// Renders a boolean verdict column.
pub fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

/// Renders an optional value, `-` when absent.
pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}
