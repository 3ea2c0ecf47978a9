use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Generator {
    /// Gaussian blobs centred evenly on a circle; one count per class.
    Blobs { counts: Vec<usize>, radius: f64, noise: f64 },
    /// Interleaved spiral arms, one per class.
    Spirals {
        classes: usize,
        per_class: usize,
        turns: f64,
        noise: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub generator: Generator,
    /// Share of each class held out for testing.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            generator: Generator::Blobs {
                counts: vec![100, 100, 40, 20],
                radius: 3.0,
                noise: 0.5,
            },
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: [f64; 2],
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyDataset {
    pub classes: usize,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

impl ToyDataset {
    pub fn split(&self, which: Split) -> &[Example] {
        match which {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x1,x2,label,split")?;
        for split in [Split::Train, Split::Test] {
            for e in self.split(split) {
                writeln!(out, "{},{},{},{}", e.x[0], e.x[1], e.label, split.as_str())?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim() == "x1,x2,label,split" => {}
            _ => return Err(Error::arg("dataset CSV must start with x1,x2,label,split")),
        }
        let mut ds = ToyDataset {
            classes: 0,
            train: Vec::new(),
            test: Vec::new(),
        };
        for (no, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::arg(format!("dataset CSV line {}: malformed row", no + 2));
            let f: Vec<&str> = line.trim().split(',').collect();
            let [x1, x2, label, split] = f[..] else {
                return Err(bad());
            };
            let e = Example {
                x: [x1.parse().map_err(|_| bad())?, x2.parse().map_err(|_| bad())?],
                label: label.parse().map_err(|_| bad())?,
            };
            ds.classes = ds.classes.max(e.label + 1);
            match split {
                "train" => ds.train.push(e),
                "test" => ds.test.push(e),
                _ => return Err(bad()),
            }
        }
        if ds.classes < 2 {
            return Err(Error::arg("dataset needs at least two classes"));
        }
        Ok(ds)
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn make_dataset(spec: &DatasetSpec) -> Result<ToyDataset> {
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::arg("test_fraction must be in [0, 1)"));
    }
    let mut rng = stream(spec.seed);
    let per_class: Vec<Vec<[f64; 2]>> = match &spec.generator {
        Generator::Blobs { counts, radius, noise } => {
            let k = counts.len();
            if k < 2 {
                return Err(Error::arg("blobs need at least two classes"));
            }
            if *noise < 0.0 {
                return Err(Error::arg("noise must be non-negative"));
            }
            counts
                .iter()
                .enumerate()
                .map(|(c, &n)| {
                    let a = TAU * c as f64 / k as f64;
                    let centre = [radius * a.cos(), radius * a.sin()];
                    (0..n)
                        .map(|_| [centre[0] + noise * normal(&mut rng), centre[1] + noise * normal(&mut rng)])
                        .collect()
                })
                .collect()
        }
        Generator::Spirals {
            classes,
            per_class,
            turns,
            noise,
        } => {
            if *classes < 2 {
                return Err(Error::arg("spirals need at least two classes"));
            }
            (0..*classes)
                .map(|c| {
                    let offset = TAU * c as f64 / *classes as f64;
                    (0..*per_class)
                        .map(|i| {
                            let r = (i as f64 + 1.0) / *per_class as f64;
                            let a = offset + TAU * turns * r;
                            [
                                r * a.cos() + noise * normal(&mut rng),
                                r * a.sin() + noise * normal(&mut rng),
                            ]
                        })
                        .collect()
                })
                .collect()
        }
    };

    let mut ds = ToyDataset {
        classes: per_class.len(),
        train: Vec::new(),
        test: Vec::new(),
    };
    let mut split_rng = stream(derive_seed(spec.seed, 1));
    for (label, mut points) in per_class.into_iter().enumerate() {
        points.shuffle(&mut split_rng);
        let n_test = (points.len() as f64 * spec.test_fraction).round() as usize;
        for (i, x) in points.into_iter().enumerate() {
            let e = Example { x, label };
            if i < n_test {
                ds.test.push(e);
            } else {
                ds.train.push(e);
            }
        }
    }
    Ok(ds)
}

/// Shuffled minibatches; every epoch visits each training example once. The
/// last batch of an epoch may be short.
#[derive(Clone, Debug)]
pub struct MinibatchStream {
    batch_size: usize,
    seed: u64,
    epoch: u64,
    cursor: usize,
    order: Vec<usize>,
}

impl MinibatchStream {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if n == 0 || batch_size == 0 {
            return Err(Error::arg("minibatches need a non-empty dataset and batch size"));
        }
        let mut s = Self {
            batch_size,
            seed,
            epoch: 0,
            cursor: 0,
            order: (0..n).collect(),
        };
        s.shuffle();
        Ok(s)
    }

    fn shuffle(&mut self) {
        self.order.sort_unstable();
        self.order.shuffle(&mut stream(derive_seed(self.seed, self.epoch)));
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Indices of the next batch, ascending so the summation order does not
    /// depend on the shuffle.
    pub fn next_batch(&mut self) -> Vec<usize> {
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let mut batch = self.order[self.cursor..end].to_vec();
        batch.sort_unstable();
        self.cursor = end;
        if self.cursor == self.order.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.shuffle();
        }
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(counts: Vec<usize>, noise: f64) -> DatasetSpec {
        DatasetSpec {
            generator: Generator::Blobs {
                counts,
                radius: 2.0,
                noise,
            },
            test_fraction: 0.2,
            seed: 5,
        }
    }

    #[test]
    fn noiseless_blobs_sit_on_their_means() {
        let ds = make_dataset(&blobs(vec![10, 10], 0.0)).unwrap();
        for e in ds.train.iter().chain(&ds.test) {
            let expect = if e.label == 0 { [2.0, 0.0] } else { [-2.0, 0.0] };
            assert!((e.x[0] - expect[0]).abs() < 1e-12 && (e.x[1] - expect[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn class_counts_as_configured() {
        let ds = make_dataset(&blobs(vec![90, 10], 1.0)).unwrap();
        let count = |c| ds.train.iter().chain(&ds.test).filter(|e| e.label == c).count();
        assert_eq!((count(0), count(1)), (90, 10));
        assert_eq!(ds.test.iter().filter(|e| e.label == 1).count(), 2);
        assert_eq!(ds, make_dataset(&blobs(vec![90, 10], 1.0)).unwrap());
        assert!(make_dataset(&blobs(vec![5], 1.0)).is_err());
    }

    #[test]
    fn spirals_build() {
        let spec = DatasetSpec {
            generator: Generator::Spirals {
                classes: 3,
                per_class: 50,
                turns: 1.0,
                noise: 0.05,
            },
            test_fraction: 0.25,
            seed: 1,
        };
        let ds = make_dataset(&spec).unwrap();
        assert_eq!(ds.classes, 3);
        assert_eq!(ds.train.len() + ds.test.len(), 150);
    }

    #[test]
    fn csv_round_trip() {
        let ds = make_dataset(&DatasetSpec::default()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x1,x2,label,split\n"));
        assert_eq!(ToyDataset::read_csv(&buf[..]).unwrap(), ds);
        assert!(ToyDataset::read_csv(&b"a,b\n"[..]).is_err());
    }

    #[test]
    fn epochs_cover_everything_once() {
        let mut s = MinibatchStream::new(10, 3, 9).unwrap();
        for _ in 0..3 {
            let mut seen = Vec::new();
            let e = s.epoch();
            while seen.len() < 10 {
                seen.extend(s.next_batch());
            }
            assert_eq!(s.epoch(), e + 1);
            seen.sort_unstable();
            assert_eq!(seen, (0..10).collect::<Vec<_>>());
        }
        let mut a = MinibatchStream::new(10, 3, 9).unwrap();
        let mut b = MinibatchStream::new(10, 3, 9).unwrap();
        for _ in 0..20 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }
}
