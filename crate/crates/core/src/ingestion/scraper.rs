//! HTML review-page parser and the scraper provider built on it.
//!
//! Expected page layout (one page of a listing's review list):
//!
//! ```text
//! link[rel=canonical]                 listing url
//! #review_list_page_container         present on every review-list page
//!   li.review_list_new_item_block     one per review, data-review-id
//!     .bui-avatar-block__title        username
//!     .reviewer_country [data-country] two-letter code
//!     .review-type                    traveller type label
//!     .c-review-block__date           "Reviewed: 12 September 2024"
//!     .bui-review-score__badge        score out of 10
//!     .c-review-block__title          title
//!     .c-review__row--positive .c-review__body[lang]
//!     .c-review__row--negative .c-review__body[lang]
//!     .c-review-block__response__body manager reply
//!     .review-helpful__count          "3 people found this helpful"
//!     .c-review-block__photos img[src]
//! a.pagenext[href]                    next page, relative to this one
//! ```

use std::path::PathBuf;

use chrono::NaiveDate;
use scraper::{ElementRef, Html, Selector};
use sha2::{Digest, Sha256};

use super::{FetchContext, FetchRequest, IngestError, ProviderConfig, ProviderFetch, ReviewProvider, SortOrder};
use crate::review::{
    hex, normalize_country, validate_listing_url, Listing, Review, ReviewerInfo, ReviewerType,
};

/// Must be supplied verbatim to enable live scraping.
pub const LIVE_SCRAPE_ACKNOWLEDGMENT: &str = "I have permission to scrape this site";

const MAX_PAGES: usize = 500;

struct Selectors {
    canonical: Selector,
    container: Selector,
    block: Selector,
    username: Selector,
    country: Selector,
    reviewer_type: Selector,
    date: Selector,
    score: Selector,
    title: Selector,
    positive: Selector,
    negative: Selector,
    reply: Selector,
    helpful: Selector,
    photos: Selector,
    next: Selector,
}

impl Selectors {
    fn new() -> Self {
        let s = |css: &str| Selector::parse(css).expect("static selector");
        Self {
            canonical: s("link[rel=canonical]"),
            container: s("#review_list_page_container"),
            block: s("li.review_list_new_item_block"),
            username: s(".bui-avatar-block__title"),
            country: s(".reviewer_country"),
            reviewer_type: s(".review-type"),
            date: s(".c-review-block__date"),
            score: s(".bui-review-score__badge"),
            title: s(".c-review-block__title"),
            positive: s(".c-review__row--positive .c-review__body"),
            negative: s(".c-review__row--negative .c-review__body"),
            reply: s(".c-review-block__response__body"),
            helpful: s(".review-helpful__count"),
            photos: s(".c-review-block__photos img"),
            next: s("a.pagenext"),
        }
    }
}

fn selectors() -> &'static Selectors {
    static CELL: std::sync::OnceLock<Selectors> = std::sync::OnceLock::new();
    CELL.get_or_init(Selectors::new)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPage {
    pub listing: Listing,
    pub reviews: Vec<Review>,
    /// `href` of the next page link, as written in the page.
    pub next_page: Option<String>,
}

/// Extracts every review block of a listing review page, in page order.
pub fn parse_reviews_page(html: &[u8]) -> Result<Vec<Review>, IngestError> {
    parse_page(html).map(|page| page.reviews)
}

pub fn parse_page(html: &[u8]) -> Result<ParsedPage, IngestError> {
    let text = std::str::from_utf8(html)
        .map_err(|_| IngestError::LayoutNotRecognized("page is not UTF-8".into()))?;
    let doc = Html::parse_document(text);
    let sel = selectors();

    if doc.select(&sel.container).next().is_none() {
        return Err(IngestError::LayoutNotRecognized("no review list container".into()));
    }
    let canonical = doc
        .select(&sel.canonical)
        .next()
        .and_then(|e| e.value().attr("href"))
        .ok_or_else(|| IngestError::LayoutNotRecognized("no canonical listing link".into()))?;
    let listing = validate_listing_url(canonical)?;

    let reviews = doc
        .select(&sel.block)
        .enumerate()
        .map(|(i, block)| parse_block(block, &listing, sel).map_err(|why| {
            IngestError::LayoutNotRecognized(format!("review block {}: {why}", i + 1))
        }))
        .collect::<Result<Vec<_>, _>>()?;
    let next_page = doc
        .select(&sel.next)
        .next()
        .and_then(|a| a.value().attr("href"))
        .map(str::to_owned);
    Ok(ParsedPage {
        listing,
        reviews,
        next_page,
    })
}

/// Text content with whitespace runs collapsed; blank becomes `None`.
fn clean_text(el: ElementRef<'_>) -> Option<String> {
    let joined: String = el.text().collect();
    let collapsed = joined.split_whitespace().collect::<Vec<_>>().join(" ");
    (!collapsed.is_empty()).then_some(collapsed)
}

fn first_text(block: ElementRef<'_>, sel: &Selector) -> Option<String> {
    block.select(sel).next().and_then(clean_text)
}

fn parse_block(block: ElementRef<'_>, listing: &Listing, sel: &Selectors) -> Result<Review, String> {
    let date_text = first_text(block, &sel.date).ok_or("missing date")?;
    let published_at = parse_review_date(&date_text).ok_or_else(|| format!("unreadable date {date_text:?}"))?;
    let score_text = first_text(block, &sel.score).ok_or("missing score")?;
    let score: f64 = score_text
        .replace(',', ".")
        .parse()
        .map_err(|_| format!("unreadable score {score_text:?}"))?;
    if !(0.0..=10.0).contains(&score) {
        return Err(format!("score {score} outside 0..=10"));
    }

    let title = first_text(block, &sel.title);
    let positive_el = block.select(&sel.positive).next();
    let negative_el = block.select(&sel.negative).next();
    let positive_text = positive_el.and_then(clean_text);
    let negative_text = negative_el.and_then(clean_text);
    let language_hint = positive_el
        .or(negative_el)
        .and_then(|e| e.value().attr("lang"))
        .map(str::to_owned);

    let country = match block.select(&sel.country).next().and_then(|e| e.value().attr("data-country")) {
        Some(code) => Some(normalize_country(code).map_err(|e| e.to_string())?),
        None => None,
    };
    let reviewer = ReviewerInfo {
        username: first_text(block, &sel.username),
        country,
        reviewer_type: first_text(block, &sel.reviewer_type).map(|t| ReviewerType::from_label(&t)),
    };

    let likes = match first_text(block, &sel.helpful) {
        Some(t) => {
            let digits: String = t.chars().take_while(char::is_ascii_digit).collect();
            digits.parse().map_err(|_| format!("unreadable helpful count {t:?}"))?
        }
        None => 0,
    };
    let photo_urls = block
        .select(&sel.photos)
        .filter_map(|img| img.value().attr("src"))
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect();

    let review_id = match block.value().attr("data-review-id").map(str::trim) {
        Some(id) if !id.is_empty() => id.to_owned(),
        _ => derived_id(published_at, &title, &positive_text, &negative_text),
    };

    let review = Review {
        review_id,
        listing_id: listing.listing_id.clone(),
        published_at,
        score,
        title,
        positive_text,
        negative_text,
        manager_reply: first_text(block, &sel.reply),
        reviewer,
        stay: None,
        likes,
        photo_urls,
        language_hint,
    };
    if review.title.is_none() && review.positive_text.is_none() && review.negative_text.is_none() {
        return Err("no title, positive or negative text".into());
    }
    Ok(review)
}

/// Content-derived id for blocks without a `data-review-id`.
fn derived_id(date: NaiveDate, title: &Option<String>, pos: &Option<String>, neg: &Option<String>) -> String {
    let mut h = Sha256::new();
    h.update(date.to_string());
    for part in [title, pos, neg] {
        h.update([0u8]);
        h.update(part.as_deref().unwrap_or_default());
    }
    format!("scr-{}", hex(&h.finalize()[..8]))
}

/// "Reviewed: 12 September 2024", "12 September 2024" or "2024-09-12".
fn parse_review_date(text: &str) -> Option<NaiveDate> {
    let body = text.split_once(':').map_or(text, |(_, rest)| rest).trim();
    NaiveDate::parse_from_str(body, "%d %B %Y")
        .or_else(|_| NaiveDate::parse_from_str(body, "%Y-%m-%d"))
        .ok()
}

/// Where review pages come from: recorded snapshots or, when explicitly
/// enabled, the live site.
pub trait PageSource: Send + Sync {
    /// `locator` is `None` for the first page, otherwise the previous
    /// page's next link.
    fn fetch_page(&self, listing: &Listing, locator: Option<&str>) -> Result<Vec<u8>, IngestError>;
}

/// Recorded pages under `<root>/<listing_id>/pages/`, starting at `page-1.html`.
#[derive(Debug, Clone)]
pub struct SnapshotPages {
    root: PathBuf,
}

impl SnapshotPages {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl PageSource for SnapshotPages {
    fn fetch_page(&self, listing: &Listing, locator: Option<&str>) -> Result<Vec<u8>, IngestError> {
        let name = locator.unwrap_or("page-1.html");
        if name.contains('/') || name.contains('\\') || name.starts_with('.') {
            return Err(IngestError::LayoutNotRecognized(format!("unexpected page link {name:?}")));
        }
        let path = self.root.join(listing.listing_id.as_str()).join("pages").join(name);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && locator.is_none() => {
                Err(IngestError::NoReviewsFound(listing.listing_id.to_string()))
            }
            Err(e) => Err(IngestError::NetworkFailure(format!("{}: {e}", path.display()))),
        }
    }
}

pub struct ScraperProvider {
    config: ProviderConfig,
    pages: Box<dyn PageSource>,
}

impl ScraperProvider {
    pub fn new(config: ProviderConfig, pages: Box<dyn PageSource>) -> Self {
        Self { config, pages }
    }
}

impl ReviewProvider for ScraperProvider {
    fn config(&self) -> &ProviderConfig {
        &self.config
    }

    /// Follows next-page links until pages run out. Pages are assumed to be
    /// newest first, so a newest-first request stops as soon as nothing on
    /// later pages could displace the reviews already collected.
    fn fetch(&self, request: &FetchRequest, _ctx: &FetchContext<'_>) -> Result<ProviderFetch, IngestError> {
        let mut reviews: Vec<Review> = Vec::new();
        let mut locator: Option<String> = None;
        let mut pages_fetched = 0;
        loop {
            let bytes = self.pages.fetch_page(&request.listing, locator.as_deref())?;
            let page = parse_page(&bytes)?;
            pages_fetched += 1;
            if page.listing.listing_id != request.listing.listing_id {
                return Err(IngestError::LayoutNotRecognized(format!(
                    "page belongs to {} not {}",
                    page.listing.url, request.listing.url
                )));
            }
            let oldest_on_page = page.reviews.iter().map(|r| r.published_at).min();
            reviews.extend(page.reviews);

            if request.sort == SortOrder::NewestFirst && reviews.len() >= request.max_reviews {
                let mut dates: Vec<NaiveDate> = reviews.iter().map(|r| r.published_at).collect();
                dates.sort_unstable_by(|a, b| b.cmp(a));
                let cutoff = dates[request.max_reviews - 1];
                if oldest_on_page.is_some_and(|d| d < cutoff) {
                    break;
                }
            }
            match page.next_page {
                Some(next) if pages_fetched < MAX_PAGES => locator = Some(next),
                _ => break,
            }
        }
        Ok(ProviderFetch { reviews, pages_fetched })
    }
}
