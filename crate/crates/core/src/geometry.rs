//! Axis-aligned geometry shared by the scene, physics and raycasting code.
//!
//! Axes: X and Z span the floor plane, Y points up.

use serde::{Deserialize, Serialize};

/// Overlap volume (m³) below which two boxes are considered touching, not interpenetrating.
pub const VOLUME_TOLERANCE: f64 = 1e-9;
/// Linear tolerance for on-line and containment predicates.
pub const LINEAR_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        self.scale(1.0 / len)
    }

    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn xz(self) -> Point2 {
        Point2::new(self.x, self.z)
    }
}

/// A point (or vector) on the floor plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.z + o.z)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.z - o.z)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.z * k)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.z - o.z)
    }
}

/// Axis-aligned rectangle on the floor plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_z: f64,
    pub max_x: f64,
    pub max_z: f64,
}

impl Rect {
    pub const fn new(min_x: f64, min_z: f64, max_x: f64, max_z: f64) -> Self {
        Self { min_x, min_z, max_x, max_z }
    }

    pub fn centered(center: Point2, half_x: f64, half_z: f64) -> Self {
        Self::new(center.x - half_x, center.z - half_z, center.x + half_x, center.z + half_z)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn depth(&self) -> f64 {
        self.max_z - self.min_z
    }

    pub fn area(&self) -> f64 {
        self.width() * self.depth()
    }

    pub fn origin(&self) -> Point2 {
        Point2::new(self.min_x, self.min_z)
    }

    pub fn center(&self) -> Point2 {
        Point2::new((self.min_x + self.max_x) * 0.5, (self.min_z + self.max_z) * 0.5)
    }

    pub fn translate(&self, by: Point2) -> Rect {
        Rect::new(self.min_x + by.x, self.min_z + by.z, self.max_x + by.x, self.max_z + by.z)
    }

    /// Closed containment with [`LINEAR_TOLERANCE`] slack.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min_x - LINEAR_TOLERANCE
            && p.x <= self.max_x + LINEAR_TOLERANCE
            && p.z >= self.min_z - LINEAR_TOLERANCE
            && p.z <= self.max_z + LINEAR_TOLERANCE
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.contains(r.origin()) && self.contains(Point2::new(r.max_x, r.max_z))
    }

    /// Area of the intersection, zero when the rectangles are disjoint or only touch.
    pub fn overlap_area(&self, o: &Rect) -> f64 {
        let w = self.max_x.min(o.max_x) - self.min_x.max(o.min_x);
        let d = self.max_z.min(o.max_z) - self.min_z.max(o.min_z);
        if w > 0.0 && d > 0.0 {
            w * d
        } else {
            0.0
        }
    }
}

/// Axis-aligned box in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Vec3, half: Vec3) -> Self {
        Self::new(center.sub(half), center.add(half))
    }

    pub fn footprint(&self) -> Rect {
        Rect::new(self.min.x, self.min.z, self.max.x, self.max.z)
    }

    pub fn center(&self) -> Vec3 {
        self.min.add(self.max).scale(0.5)
    }

    pub fn overlap_volume(&self, o: &Aabb) -> f64 {
        let mut vol = 1.0;
        for i in 0..3 {
            let lo = self.min.axis(i).max(o.min.axis(i));
            let hi = self.max.axis(i).min(o.max.axis(i));
            if hi <= lo {
                return 0.0;
            }
            vol *= hi - lo;
        }
        vol
    }

    pub fn interpenetrates(&self, o: &Aabb) -> bool {
        self.overlap_volume(o) > VOLUME_TOLERANCE
    }

    /// Euclidean distance from a point to the closest point of the box (0 inside).
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            let v = p.axis(i);
            let d = if v < self.min.axis(i) {
                self.min.axis(i) - v
            } else if v > self.max.axis(i) {
                v - self.max.axis(i)
            } else {
                0.0
            };
            sq += d * d;
        }
        sq.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub direction: Vec3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin.add(self.direction.scale(t))
    }
}

/// Parameters where a ray enters and leaves a box, and the axis of the entry face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub enter: f64,
    pub exit: f64,
    pub enter_axis: usize,
    pub exit_axis: usize,
}

/// Slab test. Returns `None` when the ray's line misses the box or the box lies
/// entirely behind the origin.
pub fn ray_box(ray: &Ray, b: &Aabb) -> Option<Crossing> {
    let mut enter = f64::NEG_INFINITY;
    let mut exit = f64::INFINITY;
    let mut enter_axis = 0;
    let mut exit_axis = 0;
    for i in 0..3 {
        let o = ray.origin.axis(i);
        let d = ray.direction.axis(i);
        let (lo, hi) = (b.min.axis(i), b.max.axis(i));
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let mut t0 = (lo - o) / d;
        let mut t1 = (hi - o) / d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > enter {
            enter = t0;
            enter_axis = i;
        }
        if t1 < exit {
            exit = t1;
            exit_axis = i;
        }
    }
    if enter > exit || exit < 0.0 {
        return None;
    }
    Some(Crossing { enter, exit, enter_axis, exit_axis })
}

/// Normalizes an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Unit heading on the floor plane for a compass angle in degrees: 0 is +Z,
/// 90 is +X (clockwise seen from above). Quarter turns are exact.
pub fn heading(deg: f64) -> Point2 {
    let a = normalize_degrees(deg);
    if a == 0.0 {
        Point2::new(0.0, 1.0)
    } else if a == 90.0 {
        Point2::new(1.0, 0.0)
    } else if a == 180.0 {
        Point2::new(0.0, -1.0)
    } else if a == 270.0 {
        Point2::new(-1.0, 0.0)
    } else {
        let r = a.to_radians();
        Point2::new(r.sin(), r.cos())
    }
}
