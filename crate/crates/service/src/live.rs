//! Network-backed implementations of the core's transport traits.

use std::io::Read;
use std::time::Duration;

use review_insight::gateway::backend::{HttpRequest, HttpResponse, TransportError};
use review_insight::gateway::HttpTransport;
use review_insight::ingestion::{IngestError, PageSource};
use review_insight::review::Listing;

const USER_AGENT: &str = concat!("review-insight/", env!("CARGO_PKG_VERSION"));
const MAX_PAGE_BYTES: u64 = 8 * 1024 * 1024;

/// Blocking HTTPS POST through ureq.
#[derive(Debug, Default)]
pub struct UreqTransport;

impl HttpTransport for UreqTransport {
    fn post(&self, request: &HttpRequest, timeout: Duration) -> Result<HttpResponse, TransportError> {
        let agent = ureq::AgentBuilder::new().timeout(timeout).user_agent(USER_AGENT).build();
        let mut call = agent.post(&request.url);
        for (name, value) in &request.headers {
            call = call.set(name, value);
        }
        match call.send_string(&request.body) {
            Ok(response) => read_response(response),
            Err(ureq::Error::Status(_, response)) => read_response(response),
            Err(ureq::Error::Transport(t)) => Err(transport_error(&t)),
        }
    }
}

fn read_response(response: ureq::Response) -> Result<HttpResponse, TransportError> {
    let status = response.status();
    let body = response.into_string().map_err(|e| TransportError::Io(e.to_string()))?;
    Ok(HttpResponse { status, body })
}

fn transport_error(t: &ureq::Transport) -> TransportError {
    let text = t.to_string();
    if text.contains("timed out") {
        TransportError::Timeout
    } else {
        TransportError::Io(text)
    }
}

/// Fetches listing pages over the network. Only constructed when the
/// operator enabled live scraping and supplied the acknowledgment.
#[derive(Debug)]
pub struct LivePages {
    agent: ureq::Agent,
}

impl LivePages {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).user_agent(USER_AGENT).build(),
        }
    }
}

impl PageSource for LivePages {
    fn fetch_page(&self, listing: &Listing, locator: Option<&str>) -> Result<Vec<u8>, IngestError> {
        let base = url::Url::parse(&listing.url).map_err(|e| IngestError::InvalidRequest(e.to_string()))?;
        let target = match locator {
            None => base.clone(),
            Some(next) => base
                .join(next)
                .map_err(|e| IngestError::LayoutNotRecognized(format!("bad next link {next:?}: {e}")))?,
        };
        if target.host_str() != base.host_str() {
            return Err(IngestError::LayoutNotRecognized(format!("next link leaves the site: {target}")));
        }
        match self.agent.get(target.as_str()).call() {
            Ok(response) => {
                let mut bytes = Vec::new();
                response
                    .into_reader()
                    .take(MAX_PAGE_BYTES)
                    .read_to_end(&mut bytes)
                    .map_err(|e| IngestError::NetworkFailure(e.to_string()))?;
                Ok(bytes)
            }
            Err(ureq::Error::Status(404, _)) if locator.is_none() => {
                Err(IngestError::NoReviewsFound(listing.listing_id.to_string()))
            }
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                Err(IngestError::NetworkFailure(format!("{target}: status {code}")))
            }
            Err(ureq::Error::Status(code, _)) => Err(IngestError::LayoutNotRecognized(format!("{target}: status {code}"))),
            Err(ureq::Error::Transport(t)) => Err(IngestError::NetworkFailure(t.to_string())),
        }
    }
}
