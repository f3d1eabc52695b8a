//! HTTP client for a remote inpainting service.
//!
//! `POST {endpoint}/inpaint` with
//! `{"image": <base64 PNG>, "mask": <base64 1-channel PNG, 255 = inpaint>, "prompt": ..., "steps": n}`
//! answered by `200 {"image": <base64 PNG>}`; failures carry `{"error": ...}`.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{InpaintBackend, InpaintOutcome, InpaintRequest, InpaintStatus};
use crate::error::{Error, Result};
use crate::raster::{decode_png, encode_mask_png, encode_png};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub image: String,
    pub mask: String,
    pub prompt: String,
    pub steps: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireResponse {
    pub image: String,
}

#[derive(Deserialize)]
struct WireError {
    error: String,
}

#[derive(Clone, Debug)]
pub struct RemoteInpainter {
    endpoint: String,
    timeout: Duration,
}

impl RemoteInpainter {
    pub fn new(endpoint: &str) -> Self {
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(600),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn encode_request<T: Scalar>(req: &InpaintRequest<'_, T>) -> Result<WireRequest> {
        if req.options.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        Ok(WireRequest {
            image: STANDARD.encode(encode_png(req.image)?),
            mask: STANDARD.encode(encode_mask_png(req.mask)?),
            prompt: req.prompt.to_string(),
            steps: req.options.steps,
        })
    }

    fn post(&self, body: &WireRequest) -> Result<(u16, String)> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let url = format!("{}/inpaint", self.endpoint);
        let network = |e: ureq::Error| Error::Network {
            endpoint: url.clone(),
            message: e.to_string(),
        };
        let mut resp = agent.post(&url).send_json(body).map_err(network)?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(512 * 1024 * 1024)
            .read_to_string()
            .map_err(network)?;
        Ok((status, text))
    }

    pub fn call<T: Scalar>(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>> {
        let body = Self::encode_request(req)?;
        let (status, text) = self.post(&body)?;
        if status != 200 {
            let message = serde_json::from_str::<WireError>(&text)
                .map(|e| e.error)
                .unwrap_or(text);
            return Err(Error::RemoteStatus { status, message });
        }
        let payload: WireResponse = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidPayload(format!("response json: {e}")))?;
        let bytes = STANDARD
            .decode(payload.image.as_bytes())
            .map_err(|e| Error::InvalidPayload(format!("base64: {e}")))?;
        let image = decode_png::<T>(&bytes)
            .map_err(|e| Error::InvalidPayload(format!("png: {e}")))?
            .into_image();
        if image.dims() != req.image.dims() {
            return Err(Error::RemoteDimensionMismatch {
                expected: req.image.dims(),
                found: image.dims(),
            });
        }
        Ok(InpaintOutcome {
            image,
            status: InpaintStatus::Remote,
        })
    }
}

impl<T: Scalar> InpaintBackend<T> for RemoteInpainter {
    fn id(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn inpaint(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>> {
        self.call(req)
    }
}
