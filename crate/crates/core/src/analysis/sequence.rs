use std::f64::consts::PI;

use num_complex::Complex64;

/// Per-phase fundamental phasors of a three-phase quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorTriple {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl PhasorTriple {
    pub fn new(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self { a, b, c }
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Fortescue components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSet {
    pub positive: Complex64,
    pub negative: Complex64,
    pub zero: Complex64,
}

fn rotator() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

pub fn symmetrical_components(pt: &PhasorTriple) -> SequenceSet {
    let a = rotator();
    let a2 = a * a;
    SequenceSet {
        zero: (pt.a + pt.b + pt.c) / 3.0,
        positive: (pt.a + a * pt.b + a2 * pt.c) / 3.0,
        negative: (pt.a + a2 * pt.b + a * pt.c) / 3.0,
    }
}

pub fn inverse_symmetrical_components(seq: &SequenceSet) -> PhasorTriple {
    let a = rotator();
    let a2 = a * a;
    PhasorTriple {
        a: seq.zero + seq.positive + seq.negative,
        b: seq.zero + a2 * seq.positive + a * seq.negative,
        c: seq.zero + a * seq.positive + a2 * seq.negative,
    }
}
