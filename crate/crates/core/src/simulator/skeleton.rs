use rand::Rng;

use crate::geometry::{BBox, Point};
use crate::joints::JOINT_COUNT;

/// Reference height of the template, head top to ankles.
pub const REFERENCE_HEIGHT: f64 = 200.0;

/// Upright frontal pose centered on the origin, y pointing down. Left joints
/// sit on the image right, as for a person facing the camera.
const TEMPLATE: [(f64, f64); JOINT_COUNT] = [
    (22.0, -60.0),  // left_shoulder
    (-22.0, -60.0), // right_shoulder
    (28.0, -28.0),  // left_elbow
    (-28.0, -28.0), // right_elbow
    (30.0, 2.0),    // left_wrist
    (-30.0, 2.0),   // right_wrist
    (13.0, 4.0),    // left_hip
    (-13.0, 4.0),   // right_hip
    (14.0, 52.0),   // left_knee
    (-14.0, 52.0),  // right_knee
    (14.0, 100.0),  // left_ankle
    (-14.0, 100.0), // right_ankle
    (0.0, -100.0),  // head_top
    (0.0, -64.0),   // neck
];

/// Kinematic parent of each joint; every parent precedes its children.
const PARENT: [Option<usize>; JOINT_COUNT] = [
    None,
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    None,
    None,
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    None,
    None,
];

const ARM_SWING: f64 = 1.2;
const LEG_SWING: f64 = 0.25;
const BODY_TILT: f64 = 0.15;
const BOX_MARGIN: f64 = 0.15;

/// Random articulation and size of one person, independent of placement.
#[derive(Debug, Clone, Copy)]
pub struct Body {
    pub scale: f64,
    pub rotation: f64,
    limb_angles: [f64; JOINT_COUNT],
}

impl Body {
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        let scale = rng.random_range(0.5..=1.5);
        let rotation = rng.random_range(-BODY_TILT..=BODY_TILT);
        let mut limb_angles = [0.0; JOINT_COUNT];
        for (k, parent) in PARENT.iter().enumerate() {
            if parent.is_some() {
                let swing = if k < 6 { ARM_SWING } else { LEG_SWING };
                limb_angles[k] = rng.random_range(-swing..=swing);
            }
        }
        Self { scale, rotation, limb_angles }
    }

    /// Joint positions relative to the body center, before scaling.
    fn local_joints(&self) -> [Point; JOINT_COUNT] {
        let mut out = [Point::new(0.0, 0.0); JOINT_COUNT];
        let mut angle = [0.0; JOINT_COUNT];
        for k in 0..JOINT_COUNT {
            let (tx, ty) = TEMPLATE[k];
            out[k] = match PARENT[k] {
                None => Point::new(tx, ty),
                Some(p) => {
                    angle[k] = angle[p] + self.limb_angles[k];
                    let (dx, dy) = (tx - TEMPLATE[p].0, ty - TEMPLATE[p].1);
                    let (s, c) = angle[k].sin_cos();
                    Point::new(out[p].x + c * dx - s * dy, out[p].y + s * dx + c * dy)
                }
            };
        }
        out
    }

    /// Joints in image coordinates with the body centered at `center`.
    pub fn joints_at(&self, center: Point) -> [Point; JOINT_COUNT] {
        let (s, c) = self.rotation.sin_cos();
        self.local_joints().map(|p| {
            let (x, y) = (p.x * self.scale, p.y * self.scale);
            Point::new(center.x + c * x - s * y, center.y + s * x + c * y)
        })
    }

    /// Annotation box: the joints' extent with a margin on every side.
    pub fn bbox_at(&self, center: Point) -> BBox {
        BBox::enclosing(self.joints_at(center))
            .expect("skeleton has joints")
            .extended(BOX_MARGIN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unarticulated_template_spans_reference_height() {
        let body = Body { scale: 1.0, rotation: 0.0, limb_angles: [0.0; JOINT_COUNT] };
        let joints = body.joints_at(Point::new(0.0, 0.0));
        for (k, p) in joints.iter().enumerate() {
            assert_eq!((p.x, p.y), TEMPLATE[k]);
        }
        let extent = BBox::enclosing(joints).unwrap();
        assert_eq!(extent.height, REFERENCE_HEIGHT);
    }

    #[test]
    fn limbs_keep_their_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let body = Body::sample(&mut rng);
        let joints = body.joints_at(Point::new(100.0, 100.0));
        for (k, parent) in PARENT.iter().enumerate() {
            if let Some(p) = *parent {
                let reference = Point::new(TEMPLATE[k].0, TEMPLATE[k].1)
                    .distance(Point::new(TEMPLATE[p].0, TEMPLATE[p].1));
                let got = joints[k].distance(joints[p]);
                assert!((got - reference * body.scale).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn box_holds_every_joint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let body = Body::sample(&mut rng);
            let c = Point::new(300.0, 200.0);
            let b = body.bbox_at(c);
            assert!(body.joints_at(c).iter().all(|&p| b.contains(p)));
        }
    }
}
