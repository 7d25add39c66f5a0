//! Test-only forward model written independently of the library: explicit
//! rotation matrix, explicit corner list, explicit projection.

#![allow(dead_code)]

/// Corners in the order of the library's vertex ids (bit 2: -x, bit 1: top, bit 0: -z).
pub fn corners(l: f64, h: f64, w: f64) -> [[f64; 3]; 8] {
    let mut out = [[0.0; 3]; 8];
    for (id, c) in out.iter_mut().enumerate() {
        let x = if id & 4 != 0 { -0.5 * l } else { 0.5 * l };
        let y = if id & 2 != 0 { -h } else { 0.0 };
        let z = if id & 1 != 0 { -0.5 * w } else { 0.5 * w };
        *c = [x, y, z];
    }
    out
}

pub fn yaw_matrix(theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn project(p: &[[f64; 4]; 3], x: [f64; 3]) -> (f64, f64, f64) {
    let h: Vec<f64> = p.iter().map(|r| r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3]).collect();
    (h[0] / h[2], h[1] / h[2], h[2])
}

/// Image coordinates and depth of all 8 corners of a posed box.
pub fn projected_corners(
    p: &[[f64; 4]; 3],
    theta: f64,
    t: [f64; 3],
    dims: (f64, f64, f64),
) -> [(f64, f64, f64); 8] {
    let r = yaw_matrix(theta);
    corners(dims.0, dims.1, dims.2).map(|c| {
        let x = [
            r[0][0] * c[0] + r[0][1] * c[1] + r[0][2] * c[2] + t[0],
            r[1][0] * c[0] + r[1][1] * c[1] + r[1][2] * c[2] + t[1],
            r[2][0] * c[0] + r[2][1] * c[1] + r[2][2] * c[2] + t[2],
        ];
        project(p, x)
    })
}

/// Small deterministic generator so oracle sweeps do not share the
/// library's sampler.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

/// Radical-inverse low-discrepancy sequence; used as a sampling estimator
/// whose error at 10^6 points sits far below the checked tolerances.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// A yaw-rotated box given by bottom-face center, yaw, and (l, h, w).
#[derive(Clone, Copy, Debug)]
pub struct OracleBox {
    pub t: [f64; 3],
    pub theta: f64,
    pub lhw: [f64; 3],
}

impl OracleBox {
    pub fn contains_bev(&self, x: f64, z: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let (dx, dz) = (x - self.t[0], z - self.t[2]);
        // Transpose of the yaw matrix takes the offset back to the box frame.
        let lx = c * dx - s * dz;
        let lz = s * dx + c * dz;
        lx.abs() <= self.lhw[0] / 2.0 && lz.abs() <= self.lhw[2] / 2.0
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p[1] <= self.t[1] && p[1] >= self.t[1] - self.lhw[1] && self.contains_bev(p[0], p[2])
    }

    /// Radius of a ground-plane circle around the center enclosing the footprint.
    pub fn reach(&self) -> f64 {
        0.5 * (self.lhw[0].powi(2) + self.lhw[2].powi(2)).sqrt()
    }
}

/// Sampled BEV and 3D IoU over the joint bounding region.
pub fn sampled_iou(a: &OracleBox, b: &OracleBox, n: u64) -> (f64, f64) {
    let lo_x = (a.t[0] - a.reach()).min(b.t[0] - b.reach());
    let hi_x = (a.t[0] + a.reach()).max(b.t[0] + b.reach());
    let lo_z = (a.t[2] - a.reach()).min(b.t[2] - b.reach());
    let hi_z = (a.t[2] + a.reach()).max(b.t[2] + b.reach());
    let lo_y = (a.t[1] - a.lhw[1]).min(b.t[1] - b.lhw[1]);
    let hi_y = a.t[1].max(b.t[1]);
    let (mut bev_i, mut bev_u, mut vol_i, mut vol_u) = (0u64, 0u64, 0u64, 0u64);
    for i in 1..=n {
        let x = lo_x + (hi_x - lo_x) * halton(i, 2);
        let z = lo_z + (hi_z - lo_z) * halton(i, 3);
        let y = lo_y + (hi_y - lo_y) * halton(i, 5);
        let (ia, ib) = (a.contains_bev(x, z), b.contains_bev(x, z));
        bev_i += (ia && ib) as u64;
        bev_u += (ia || ib) as u64;
        let (ja, jb) = (a.contains([x, y, z]), b.contains([x, y, z]));
        vol_i += (ja && jb) as u64;
        vol_u += (ja || jb) as u64;
    }
    let ratio = |i: u64, u: u64| if u == 0 { 0.0 } else { i as f64 / u as f64 };
    (ratio(bev_i, bev_u), ratio(vol_i, vol_u))
}
