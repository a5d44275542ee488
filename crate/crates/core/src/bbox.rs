/// Axis-aligned box in map coordinates: center column `cx`, center row
/// `cy`, height and width in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub h: f64,
    pub w: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, h: f64, w: f64) -> Self {
        Self { cx, cy, h, w }
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.h.max(0.0) * self.w.max(0.0)
    }

    /// Center as `(row, col)`.
    pub fn center(&self) -> (f64, f64) {
        (self.cy, self.cx)
    }

    pub fn center_distance(&self, other: &BBox) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }

    /// Overlap of the box with the rectangle `[0, width) × [0, height)`.
    pub fn intersects_frame(&self, height: usize, width: usize) -> bool {
        self.right() > 0.0 && self.left() < width as f64 && self.bottom() > 0.0 && self.top() < height as f64
    }

    pub fn is_finite(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite() && self.h.is_finite() && self.w.is_finite()
    }
}

/// Intersection over union; 0 when the boxes are disjoint or both empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 || inter <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}
