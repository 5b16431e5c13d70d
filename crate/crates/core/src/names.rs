//! Helpers for entity names of the form `{class} {number}` ("mug 1",
//! "drawer 3", "red block 2").

/// Splits an instance name into its class and number.
///
/// The class is everything before the final whitespace-separated token,
/// which must be a positive integer.
pub fn split_instance(name: &str) -> Option<(&str, u32)> {
    let name = name.trim();
    let (class, num) = name.rsplit_once(' ')?;
    let class = class.trim_end();
    if class.is_empty() || !num.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: u32 = num.parse().ok()?;
    Some((class, n))
}

/// Class part of an instance name; the whole name when it carries no number.
pub fn class_of(name: &str) -> &str {
    split_instance(name).map(|(c, _)| c).unwrap_or(name)
}

/// Number part of an instance name, zero when absent.
pub fn number_of(name: &str) -> u32 {
    split_instance(name).map(|(_, n)| n).unwrap_or(0)
}

pub fn instance(class: &str, n: u32) -> String {
    format!("{class} {n}")
}

/// Joins items the way the simulator lists them: `a, b, and c`.
pub fn join_list(items: &[String]) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        _ => {
            let (last, head) = items.split_last().unwrap();
            format!("{}, and {}", head.join(", "), last)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_simple_and_multiword_names() {
        assert_eq!(split_instance("mug 1"), Some(("mug", 1)));
        assert_eq!(split_instance("red block 12"), Some(("red block", 12)));
        assert_eq!(split_instance("mug"), None);
        assert_eq!(split_instance("mug x"), None);
        assert_eq!(class_of("diningtable 1"), "diningtable");
        assert_eq!(number_of("drawer 4"), 4);
    }

    #[test]
    fn list_joining() {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(join_list(&v(&[])), "");
        assert_eq!(join_list(&v(&["a mug 1"])), "a mug 1");
        assert_eq!(join_list(&v(&["a x 1", "a y 1"])), "a x 1, and a y 1");
        assert_eq!(join_list(&v(&["a", "b", "c"])), "a, b, and c");
    }
}
