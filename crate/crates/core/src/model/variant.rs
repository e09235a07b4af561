use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// How a model was obtained. Filtered variants are an existing model
/// evaluated on filter-transformed real inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariantTag {
    Vanilla,
    DataAug,
    FineTuned,
    DepthNoise,
    Filtered(String),
}

impl VariantTag {
    pub fn is_filtered(&self) -> bool {
        matches!(self, VariantTag::Filtered(_))
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantTag::Vanilla => f.write_str("vanilla"),
            VariantTag::DataAug => f.write_str("data_aug"),
            VariantTag::FineTuned => f.write_str("fine_tuned"),
            VariantTag::DepthNoise => f.write_str("depth_noise"),
            VariantTag::Filtered(id) => write!(f, "filtered:{id}"),
        }
    }
}

impl FromStr for VariantTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(VariantTag::Vanilla),
            "data_aug" | "data-aug" | "dataAug" => Ok(VariantTag::DataAug),
            "fine_tuned" | "fine-tuned" | "fineTuned" => Ok(VariantTag::FineTuned),
            "depth_noise" | "depth-noise" | "perlin" => Ok(VariantTag::DepthNoise),
            other => match other.strip_prefix("filtered:") {
                Some(id) if !id.is_empty() => Ok(VariantTag::Filtered(id.to_string())),
                _ => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
            },
        }
    }
}

impl Serialize for VariantTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariantTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_roundtrip() {
        for v in [
            VariantTag::Vanilla,
            VariantTag::DataAug,
            VariantTag::FineTuned,
            VariantTag::DepthNoise,
            VariantTag::Filtered("bright15".into()),
        ] {
            assert_eq!(v.to_string().parse::<VariantTag>().unwrap(), v);
        }
        assert!("filtered:".parse::<VariantTag>().is_err());
        assert_eq!(
            "perlin".parse::<VariantTag>().unwrap(),
            VariantTag::DepthNoise
        );
    }
}
