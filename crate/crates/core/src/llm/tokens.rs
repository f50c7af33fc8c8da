/// Rough token estimate.
///
/// Every maximal run of alphanumeric characters costs `ceil(len / 4)`
/// tokens (sub-word pieces of about four characters), every other
/// non-whitespace character costs one, whitespace is free. Splitting text
/// can only split runs, and `ceil(a/4) + ceil(b/4) >= ceil((a+b)/4)`, so
/// `count(a + b) >= max(count(a), count(b))` always holds.
pub fn count_tokens(text: &str) -> usize {
    let mut total = 0;
    let mut run = 0usize;
    for c in text.chars() {
        if c.is_alphanumeric() {
            run += 1;
            continue;
        }
        total += run.div_ceil(4);
        run = 0;
        if !c.is_whitespace() {
            total += 1;
        }
    }
    total + run.div_ceil(4)
}
