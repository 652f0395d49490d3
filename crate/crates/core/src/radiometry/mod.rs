//! Camera response recovery, exposure fusion, stack alignment and light
//! intensity calibration.

mod align;
mod card;
mod graycard;
mod merge;
mod response;

pub use align::{mtb_align, mtb_gray, mtb_shift, translate, Bitmaps, EXCLUSION_BAND};
pub use card::{downsample_card, downsample_mean, generate_color_card, CARD_COLS, CARD_ROWS};
pub use graycard::{
    gray_card_intensity, scale_intensity, CalibrationRecord, CameraTag, CALIBRATION_VERSION,
};
pub use merge::{merge_radiance, ExposureStack, RadianceMap};
pub use response::{hat_weight, solve_response, ResponseCurve, DEFAULT_SMOOTHNESS, GAUGE_Z};
