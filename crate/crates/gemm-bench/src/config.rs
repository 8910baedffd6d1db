//! Benchmark configuration: problem sizes, rank grids, tile majors.

use std::fmt;

/// Named problem sizes. MINI and EXTRALARGE follow the distributed GEMM
/// case study; SMALL, MEDIUM, and LARGE are the Polybench 4.2 sizes
/// rounded up to the nearest multiple of 64 so rank grids divide evenly.
pub const DATASETS: &[(&str, (usize, usize, usize))] = &[
    ("MINI", (64, 64, 64)),
    ("SMALL", (64, 128, 128)),
    ("MEDIUM", (256, 256, 256)),
    ("LARGE", (1024, 1152, 1216)),
    ("EXTRALARGE", (2048, 2560, 1408)),
];

pub fn dataset_dims(name: &str) -> Option<(usize, usize, usize)> {
    let up = name.to_ascii_uppercase();
    DATASETS.iter().find(|(n, _)| *n == up).map(|(_, d)| *d)
}

/// Outermost dimension of each rank-local tile, written C/A/B.
/// C picks from {I, J}, A from {I, K}, B from {K, J}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Majors {
    pub c: char,
    pub a: char,
    pub b: char,
}

impl Majors {
    pub fn parse(s: &str) -> Result<Majors, String> {
        let parts: Vec<&str> = s.split('/').collect();
        let [c, a, b] = parts[..] else {
            return Err(format!("majors must be written C/A/B, e.g. I/I/J, got {s:?}"));
        };
        Ok(Majors {
            c: pick("C", c, &['I', 'J'])?,
            a: pick("A", a, &['I', 'K'])?,
            b: pick("B", b, &['K', 'J'])?,
        })
    }

    /// Every legal combination, C's major varying slowest.
    pub fn all() -> Vec<Majors> {
        let mut out = Vec::new();
        for c in ['I', 'J'] {
            for a in ['I', 'K'] {
                for b in ['K', 'J'] {
                    out.push(Majors { c, a, b });
                }
            }
        }
        out
    }
}

fn pick(matrix: &str, got: &str, allowed: &[char]) -> Result<char, String> {
    let mut chars = got.chars();
    match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
        (Some(c), None) if allowed.contains(&c) => Ok(c),
        _ => Err(format!(
            "{matrix} tile major must be one of {allowed:?}, got {got:?}"
        )),
    }
}

impl fmt::Display for Majors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.c, self.a, self.b)
    }
}

#[derive(Clone, Debug)]
pub struct GemmConfig {
    /// Reporting label: a dataset name, or "custom" for explicit dims.
    pub dataset: String,
    pub ni: usize,
    pub nj: usize,
    pub nk: usize,
    pub ranks: usize,
    /// Rows of the rank grid; must divide `ranks`.
    pub grid_m: usize,
    pub majors: Majors,
    pub repeats: usize,
}

impl GemmConfig {
    pub fn for_dataset(
        name: &str,
        ranks: usize,
        grid_m: usize,
        majors: Majors,
        repeats: usize,
    ) -> Option<GemmConfig> {
        let (ni, nj, nk) = dataset_dims(name)?;
        Some(GemmConfig {
            dataset: name.to_ascii_uppercase(),
            ni,
            nj,
            nk,
            ranks,
            grid_m,
            majors,
            repeats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_lookup_is_case_insensitive() {
        assert_eq!(dataset_dims("mini"), Some((64, 64, 64)));
        assert_eq!(dataset_dims("ExtraLarge"), Some((2048, 2560, 1408)));
        assert_eq!(dataset_dims("HUGE"), None);
    }

    #[test]
    fn majors_parse_and_print() {
        let m = Majors::parse("I/I/J").unwrap();
        assert_eq!((m.c, m.a, m.b), ('I', 'I', 'J'));
        assert_eq!(m.to_string(), "I/I/J");
        assert_eq!(Majors::parse("j/k/j").unwrap().to_string(), "J/K/J");
    }

    #[test]
    fn majors_reject_illegal_axes() {
        assert!(Majors::parse("K/I/J").is_err());
        assert!(Majors::parse("I/J/J").is_err());
        assert!(Majors::parse("I/I/I").is_err());
        assert!(Majors::parse("I/I").is_err());
        assert!(Majors::parse("II/I/J").is_err());
    }

    #[test]
    fn eight_major_combinations() {
        let all = Majors::all();
        assert_eq!(all.len(), 8);
        for pair in all.windows(2) {
            assert_ne!(pair[0], pair[1]);
        }
    }
}
