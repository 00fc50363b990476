use ::url::Url;

use super::{Listing, ListingId, Platform, ReviewError};

const ALLOWED_DOMAINS: &[&str] = &["booking.com"];

/// Query parameters that only track the share link and never change the page.
fn is_tracking_param(name: &str) -> bool {
    matches!(name, "aid" | "label" | "sid") || name.starts_with("utm_")
}

/// Parses and canonicalizes a listing URL.
///
/// The canonical form has an `https` scheme, a lowercase host, no fragment and
/// none of the tracking parameters; the remaining query parameters keep their
/// original order. `http` links are upgraded.
pub fn validate_listing_url(raw: &str) -> Result<Listing, ReviewError> {
    let mut url = Url::parse(raw.trim()).map_err(|e| ReviewError::MalformedUrl(format!("{raw}: {e}")))?;
    match url.scheme() {
        "https" => {}
        "http" => url
            .set_scheme("https")
            .map_err(|()| ReviewError::MalformedUrl(raw.to_owned()))?,
        other => return Err(ReviewError::MalformedUrl(format!("{raw}: unsupported scheme {other}"))),
    }
    let host = url
        .host_str()
        .ok_or_else(|| ReviewError::MalformedUrl(format!("{raw}: missing host")))?
        .to_ascii_lowercase();
    let allowed = ALLOWED_DOMAINS
        .iter()
        .any(|d| host == *d || host.ends_with(&format!(".{d}")));
    if !allowed {
        return Err(ReviewError::UnsupportedHost(host));
    }

    url.set_fragment(None);
    let kept: Vec<(String, String)> = url
        .query_pairs()
        .filter(|(k, _)| !is_tracking_param(k))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    if kept.is_empty() {
        url.set_query(None);
    } else {
        url.query_pairs_mut().clear().extend_pairs(kept);
    }
    url.set_port(None).ok();

    let canonical = url.to_string();
    Ok(Listing {
        listing_id: ListingId::from_canonical_url(&canonical),
        url: canonical,
        name: None,
        platform: Platform::Booking,
    })
}
