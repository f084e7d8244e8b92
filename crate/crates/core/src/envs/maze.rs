use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Axis-aligned wall, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    /// Whether the closed segment `a -> b` touches the rectangle
    /// (Liang-Barsky clipping).
    pub fn intersects_segment(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let d = [b[0] - a[0], b[1] - a[1]];
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-d[0], a[0] - self.x_min),
            (d[0], self.x_max - a[0]),
            (-d[1], a[1] - self.y_min),
            (d[1], self.y_max - a[1]),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Wall rectangles inside the `[-1, 1]²` map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MazeLayout {
    pub walls: Vec<Rect>,
}

impl MazeLayout {
    pub fn new(walls: Vec<Rect>) -> Self {
        Self { walls }
    }

    /// Three horizontal bars attached alternately to the left and right map
    /// edges, leaving an S-shaped corridor from the bottom to the top.
    pub fn s_corridor() -> Self {
        Self::new(vec![
            Rect::new(-1.0, -0.55, 0.4, -0.45),
            Rect::new(-0.4, -0.05, 1.0, 0.05),
            Rect::new(-1.0, 0.45, 0.4, 0.55),
        ])
    }

    /// A single square block centred on the origin.
    pub fn central_block(half_width: f64) -> Self {
        Self::new(vec![Rect::new(-half_width, -half_width, half_width, half_width)])
    }

    pub fn admissible(&self, p: [f64; 2]) -> bool {
        p.iter().all(|v| (-1.0..=1.0).contains(v)) && !self.walls.iter().any(|w| w.contains(p))
    }

    pub fn segment_blocked(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        self.walls.iter().any(|w| w.intersects_segment(a, b))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("maze layout serializes")
    }
}
