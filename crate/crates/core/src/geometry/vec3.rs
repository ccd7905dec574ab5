pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Angle between two nonzero vectors, robust near 0 and π.
pub fn angle(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Point at fraction `t` along the great-circle arc from `a` to `b`
/// (unit vectors).
pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let omega = angle(a, b);
    if omega < 1e-15 {
        return a;
    }
    let s = omega.sin();
    let wa = ((1.0 - t) * omega).sin() / s;
    let wb = (t * omega).sin() / s;
    normalize(add(scale(a, wa), scale(b, wb)))
}

/// Orthonormal frame; columns are the images of the local axes.
/// `to_global` maps local coordinates to global ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub cols: [Vec3; 3],
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            cols: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// A frame whose local `+z` axis points along `pole`.
    pub fn with_pole(pole: Vec3) -> Self {
        let e3 = normalize(pole);
        let helper = if e3[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = normalize(cross(helper, e3));
        let e2 = cross(e3, e1);
        Frame { cols: [e1, e2, e3] }
    }

    pub fn to_global(&self, p: Vec3) -> Vec3 {
        let c = &self.cols;
        [
            c[0][0] * p[0] + c[1][0] * p[1] + c[2][0] * p[2],
            c[0][1] * p[0] + c[1][1] * p[1] + c[2][1] * p[2],
            c[0][2] * p[0] + c[1][2] * p[1] + c[2][2] * p[2],
        ]
    }

    pub fn to_local(&self, p: Vec3) -> Vec3 {
        [dot(self.cols[0], p), dot(self.cols[1], p), dot(self.cols[2], p)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip_and_pole() {
        let f = Frame::with_pole([0.3, -0.4, 0.2]);
        let p = [1.0, 2.0, -0.5];
        let q = f.to_local(f.to_global(p));
        for k in 0..3 {
            assert!((p[k] - q[k]).abs() < 1e-14);
        }
        let z = f.to_global([0.0, 0.0, 1.0]);
        let expect = normalize([0.3, -0.4, 0.2]);
        for k in 0..3 {
            assert!((z[k] - expect[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn slerp_midpoint_on_equator() {
        let m = slerp([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.5);
        let s = 0.5f64.sqrt();
        assert!((m[0] - s).abs() < 1e-14 && (m[1] - s).abs() < 1e-14);
        assert!((angle([1.0, 0.0, 0.0], m) - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }
}
