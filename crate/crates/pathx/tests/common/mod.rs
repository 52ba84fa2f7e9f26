#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GENRES: usize = 12;
pub const ACTORS: usize = 30;
pub const DIRECTORS: usize = 10;

/// A small movie world written as MovieLens-style ratings plus a canonical
/// triple file and label file.
pub struct World {
    pub users: usize,
    pub items: usize,
    pub seed: u64,
}

impl Default for World {
    fn default() -> Self {
        World { users: 40, items: 120, seed: 7 }
    }
}

impl World {
    pub fn triples(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut s = String::new();
        for i in 1..=self.items {
            let g = rng.gen_range(0..GENRES);
            let _ = writeln!(s, "{i}\tgenre\tg{g}\th");
            if rng.gen_bool(0.4) {
                let _ = writeln!(s, "{i}\tgenre\tg{}\th", (g + 1) % GENRES);
            }
            for _ in 0..rng.gen_range(1..=3) {
                let _ = writeln!(s, "{i}\tcast member\ta{}\th", rng.gen_range(0..ACTORS));
            }
            let _ = writeln!(s, "{i}\tdirector\td{}\th", rng.gen_range(0..DIRECTORS));
        }
        for g in 1..GENRES {
            let _ = writeln!(s, "g{g}\tsubclass of\tg{}\t-", g / 3);
        }
        s
    }

    pub fn labels(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.items {
            let _ = writeln!(s, "{i}\tMovie {i}");
        }
        for g in 0..GENRES {
            let _ = writeln!(s, "g{g}\tGenre {g}");
        }
        for a in 0..ACTORS {
            let _ = writeln!(s, "a{a}\tActor {a}");
        }
        for d in 0..DIRECTORS {
            let _ = writeln!(s, "d{d}\tDirector {d}");
        }
        s
    }

    /// Popularity is skewed towards low item ids. Item ids above the graph
    /// range are rated too, so the coverage filter has work to do.
    pub fn ratings(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        let mut s = String::from("userId,movieId,rating,timestamp\n");
        for u in 1..=self.users {
            let n = rng.gen_range(12..=25);
            let mut seen = std::collections::BTreeSet::new();
            while seen.len() < n {
                let x: f64 = rng.gen();
                let i = 1 + ((x * x) * (self.items + 5) as f64) as usize;
                seen.insert(i);
            }
            for i in seen {
                let r = f64::from(rng.gen_range(1..=10)) / 2.0;
                let t = 1_000_000 + rng.gen_range(0..100_000);
                let _ = writeln!(s, "{u},{i},{r},{t}");
            }
        }
        s
    }

    /// Writes the three data files and a config into `dir`; `extra` is
    /// appended to the top-level config keys.
    pub fn write(&self, dir: &Path, extra: &str) -> PathBuf {
        std::fs::write(dir.join("ratings.csv"), self.ratings()).unwrap();
        std::fs::write(dir.join("kg.tsv"), self.triples()).unwrap();
        std::fs::write(dir.join("kg.labels"), self.labels()).unwrap();
        let cfg = dir.join("run.toml");
        std::fs::write(
            &cfg,
            format!(
                "{extra}\n\n[dataset]\npath = \"ratings.csv\"\npreset = \"movielens\"\n\n[kg]\npath = \"kg.tsv\"\nlabels = \"kg.labels\"\nhierarchy = [\"subclass of\"]\n"
            ),
        )
        .unwrap();
        cfg
    }
}

pub fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
