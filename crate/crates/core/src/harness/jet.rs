//! Second-order forward-mode derivatives in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with first and second partial derivatives in `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Self::default() }
    }

    pub fn var_x(x: f64) -> Self {
        Self {
            v: x,
            dx: 1.0,
            ..Self::default()
        }
    }

    pub fn var_y(y: f64) -> Self {
        Self {
            v: y,
            dy: 1.0,
            ..Self::default()
        }
    }

    /// Composes with a scalar function given its value and first two
    /// derivatives at `self.v`.
    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn powi(self, n: i32) -> Self {
        let nf = n as f64;
        let f2 = if !(0..2).contains(&n) {
            nf * (nf - 1.0) * self.v.powi(n - 2)
        } else {
            0.0
        };
        let f1 = if n != 0 { nf * self.v.powi(n - 1) } else { 0.0 };
        self.chain(self.v.powi(n), f1, f2)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let r = 1.0 / o.v;
        self * o.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, c: f64) -> Jet2 {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, c: f64) -> Jet2 {
        self + (-c)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 {
            v: self.v * c,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c,
            dxy: self.dxy * c,
            dyy: self.dyy * c,
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl Add<Jet2> for f64 {
    type Output = Jet2;
    fn add(self, j: Jet2) -> Jet2 {
        j + self
    }
}

impl Sub<Jet2> for f64 {
    type Output = Jet2;
    fn sub(self, j: Jet2) -> Jet2 {
        -j + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64) -> [f64; 5] {
        let h = 1e-4;
        [
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
            (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h),
            (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h),
            (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let jet = |x: Jet2, y: Jet2| (x * y).sin() * x.powi(3) + (y * 2.0).cos() / (1.0 + x * x) - (x - y).exp();
        let val = |x: f64, y: f64| (x * y).sin() * x.powi(3) + (2.0 * y).cos() / (1.0 + x * x) - (x - y).exp();
        for &(x, y) in &[(0.3, -0.4), (1.1, 0.7), (-0.8, 0.25)] {
            let j = jet(Jet2::var_x(x), Jet2::var_y(y));
            assert!((j.v - val(x, y)).abs() < 1e-15);
            let d = fd(val, x, y);
            for (a, b) in [j.dx, j.dy, j.dxx, j.dxy, j.dyy].iter().zip(d) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn powi_edge_cases() {
        let x = Jet2::var_x(0.0);
        assert_eq!(x.powi(0), Jet2::constant(1.0));
        let p1 = x.powi(1);
        assert_eq!((p1.v, p1.dx, p1.dxx), (0.0, 1.0, 0.0));
        let p2 = x.powi(2);
        assert_eq!((p2.v, p2.dx, p2.dxx), (0.0, 0.0, 2.0));
    }
}
