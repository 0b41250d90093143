//! Exact laws of the girls count, as floats and as exact dyadic rationals.

use sexratio::exact::{exact_girls_p_boys_more, pmf_girls_p_boys, pmf_girls_p_boys_more};

fn main() -> sexratio::Result<()> {
    let two_boys = pmf_girls_p_boys(2, 12)?;
    let one_more = pmf_girls_p_boys_more(1, 12)?;
    println!("{:>3} {:>14} {:>14} {:>22}", "j", "pboys:2", "pboysmore:1", "pboysmore:1 exact");
    for j in 0..=12 {
        let exact = exact_girls_p_boys_more(1, j).map_or("-".to_string(), |d| format!("{}/2^{}", d.num, d.exp));
        println!("{:>3} {:>14.10} {:>14.10} {:>22}", j, two_boys.mass(j), one_more.mass(j), exact);
    }
    println!("unlisted mass: pboys:2 {:.3e}, pboysmore:1 {:.3e}", 1.0 - two_boys.listed_total(), 1.0 - one_more.listed_total());
    Ok(())
}
