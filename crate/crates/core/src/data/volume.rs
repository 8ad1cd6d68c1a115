use crate::error::{Error, Result};

/// Stack of hand patches for one hand: `frames × height × width × channels`,
/// row-major, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HandVolume {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl HandVolume {
    pub fn new(frames: usize, height: usize, width: usize, channels: usize, mut data: Vec<f32>) -> Result<Self> {
        if data.len() != frames * height * width * channels {
            return Err(Error::Shape(format!(
                "hand volume {frames}x{height}x{width}x{channels} needs {} values, got {}",
                frames * height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite hand volume value".into()));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(HandVolume {
            frames,
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(frames: usize, height: usize, width: usize, channels: usize, value: f32) -> Self {
        HandVolume {
            frames,
            height,
            width,
            channels,
            data: vec![value.clamp(0.0, 1.0); frames * height * width * channels],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.frames, self.height, self.width, self.channels]
    }

    #[inline]
    pub fn at(&self, f: usize, y: usize, x: usize, c: usize) -> f32 {
        self.data[((f * self.height + y) * self.width + x) * self.channels + c]
    }
}
