//! Bundled synthetic test images with values in `[0, 1]`.

use core::str::FromStr;

use crate::error::Error;
use crate::math;
use crate::tensor::{ImageTensor, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticImage {
    Checkerboard,
    Bump,
    Cartoon,
}

impl SyntheticImage {
    pub const ALL: [SyntheticImage; 3] = [Self::Checkerboard, Self::Bump, Self::Cartoon];

    pub fn name(self) -> &'static str {
        match self {
            Self::Checkerboard => "checkerboard",
            Self::Bump => "bump",
            Self::Cartoon => "cartoon",
        }
    }

    pub fn render(self, height: usize, width: usize) -> ImageTensor {
        let shape = Shape::image(height, width);
        let (h, w) = (height as f64, width as f64);
        match self {
            Self::Checkerboard => {
                let cell = (height.min(width) / 8).max(1);
                ImageTensor::from_fn(
                    shape,
                    |_, i, j| if (i / cell + j / cell).is_multiple_of(2) { 0.8 } else { 0.2 },
                )
            }
            Self::Bump => {
                let s = 0.2 * h.min(w);
                ImageTensor::from_fn(shape, |_, i, j| {
                    let di = i as f64 - 0.5 * (h - 1.0);
                    let dj = j as f64 - 0.5 * (w - 1.0);
                    0.1 + 0.8 * math::exp(-(di * di + dj * dj) / (2.0 * s * s))
                })
            }
            Self::Cartoon => ImageTensor::from_fn(shape, |_, i, j| {
                let (y, x) = (i as f64 / h, j as f64 / w);
                let disk = (x - 0.62) * (x - 0.62) + (y - 0.38) * (y - 0.38) < 0.22 * 0.22;
                let rect = (0.12..0.48).contains(&x) && (0.55..0.88).contains(&y);
                let band = x + y > 1.45;
                if disk {
                    0.85
                } else if rect {
                    0.15
                } else if band {
                    0.6
                } else {
                    0.4
                }
            }),
        }
    }
}

impl FromStr for SyntheticImage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|img| img.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown synthetic image '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_are_in_range() {
        for img in SyntheticImage::ALL {
            let t = img.render(64, 64);
            assert_eq!(t.shape(), Shape::image(64, 64));
            assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(img.name().parse::<SyntheticImage>().unwrap(), img);
        }
        assert!("lena".parse::<SyntheticImage>().is_err());
    }
}
