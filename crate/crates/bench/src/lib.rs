//! Synthetic input generators shared by the benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use scriptwatch_core::tree::Dataset;

/// An HTML document with `n` src-bearing script tags spread through filler
/// markup.
pub fn synthetic_document(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("<!DOCTYPE html><html><head><title>bench</title></head><body>\n");
    for i in 0..n {
        for _ in 0..rng.gen_range(0..4) {
            out.push_str("<div class=\"filler\"><p>lorem ipsum</p></div>\n");
        }
        let host = format!("cdn{}.example{}.com", rng.gen_range(0..50), rng.gen_range(0..10));
        out.push_str(&format!(
            "<script src=\"https://{host}/assets/v{i}/app.js?cb={}\" async></script>\n",
            rng.gen::<u32>()
        ));
    }
    out.push_str("</body></html>\n");
    out.into_bytes()
}

/// Script-like bodies of roughly `size` bytes.
pub fn synthetic_script(size: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(size + 64);
    out.push_str("function bench() {\n");
    while out.len() < size {
        out.push_str(&format!(
            "  var v{} = \"{}\";\n",
            out.len(),
            rng.gen::<u64>()
        ));
    }
    out.push_str("}\n");
    out.into_bytes()
}

/// A filter list with `n` rules across the supported syntax forms.
pub fn synthetic_filter_list(n: usize) -> String {
    let mut out = String::from("! synthetic benchmark list\n");
    for i in 0..n {
        match i % 4 {
            0 => out.push_str(&format!("||adhost{i}.net^\n")),
            1 => out.push_str(&format!("/banners/v{i}/*\n")),
            2 => out.push_str(&format!("track{i}*.js\n")),
            _ => out.push_str(&format!("pixel{i}$script\n")),
        }
    }
    out
}

/// A two-class dataset with a weak signal on a few columns.
pub fn synthetic_dataset(rows: usize, columns: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let label = u8::from(rng.gen_bool(0.5));
        let mut row: Vec<f64> = (0..columns).map(|_| rng.gen_range(0.0..1.0)).collect();
        if label == 1 {
            row[0] += 0.3;
            row[1] += 0.1;
        }
        data.push(row);
        labels.push(label);
    }
    let names = (0..columns).map(|c| format!("c{c}")).collect();
    Dataset::new(names, data, labels).unwrap()
}
