#!/usr/bin/env python3
"""Regenerates the 200-review fixture listing.

Writes, under fixtures/<listing_id>/:
  reviews.corpus   canonical corpus file
  pages/page-N.html  review-list pages, 25 reviews each, newest first
  arel.json        flat reseller records
  caprolok.json    nested reseller records

Output is fully determined by SEED. Exactly three reviews mention parking.
"""

import datetime as dt
import hashlib
import html
import json
import pathlib
import random

SEED = 20241001
URL = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html"
NAME = "Aegean Breeze Suites"
N_REVIEWS = 200
PAGE_SIZE = 25
NEWEST = dt.date(2024, 9, 28)
PARKING_AT = {4, 61, 137}

TITLES = [
    "Wonderful stay", "Great location", "Perfect for a beach holiday", "Very good",
    "Exceptional", "Good value", "Lovely hosts", "Would come back", "Pleasant",
    "Nice but noisy", "Disappointing", "Okay for a short stay", "Superb view",
]
POSITIVE = [
    "The beach is a two minute walk from the door.",
    "Breakfast was fresh with local cheese, honey and fruit.",
    "Staff were friendly and helped us book a boat trip.",
    "The room was spotless and cleaned every day.",
    "Amazing sea view from the balcony at sunset.",
    "The pool area is quiet and has plenty of sunbeds.",
    "Wifi was fast enough for video calls.",
    "The bed was very comfortable and the air conditioning worked well.",
    "Great location near tavernas and the old harbour.",
    "The host gave us excellent restaurant tips.",
    "Kitchenette had everything we needed for simple meals.",
    "Check-in was quick even though we arrived late.",
    "Towels were changed daily and the shower was powerful.",
    "Good value for the price in high season.",
]
NEGATIVE = [
    "The walls are thin and we could hear the neighbours.",
    "Wifi dropped in the evenings.",
    "The shower pressure was weak on the top floor.",
    "Breakfast was the same every day.",
    "Street noise from the bars until late.",
    "The stairs are steep with heavy luggage.",
    "Air conditioning in our room was loud.",
    "Pool closes early at seven.",
    "Mosquitoes at night, bring repellent.",
    "The room was smaller than in the photos.",
]
PARKING = {
    4: ("positive", "Free private parking right next to the building."),
    61: ("negative", "Parking is limited, we had to leave the car on the street."),
    137: ("positive", "Parking was free and easy to find."),
}
REPLIES = [
    "Thank you for your kind words, we hope to welcome you again!",
    "Thank you for your feedback, we will look into the noise issue.",
    "We are glad you enjoyed the beach and the breakfast.",
]
USERNAMES = [
    "Maria", "Jonas", "Elena", "Pierre", "Sofia", "Tom", "Giulia", "Nikos", "Anna", "Lukas",
    "Claire", "Marco", "Eva", "Dimitris", "Sarah", "Kenji", "Ola", "Ines", "Jan", "Chloe",
]
COUNTRIES = [
    ("GR", "Greece"), ("DE", "Germany"), ("FR", "France"), ("IT", "Italy"), ("GB", "United Kingdom"),
    ("NL", "Netherlands"), ("SE", "Sweden"), ("US", "United States"), ("ES", "Spain"), ("PL", "Poland"),
]
TYPES = [("couple", "Couple"), ("family", "Family"), ("solo", "Solo traveller"),
         ("group", "Group"), ("business", "Business traveller")]


def listing_id(url):
    return hashlib.sha256(url.encode()).hexdigest()[:16]


def generate():
    rng = random.Random(SEED)
    lid = listing_id(URL)
    reviews = []
    day = NEWEST
    for i in range(N_REVIEWS):
        day -= dt.timedelta(days=rng.choice([0, 1, 1, 2, 3]))
        low = rng.random() < 0.15
        score = round(rng.uniform(3.0, 6.5) if low else rng.uniform(7.0, 10.0), 1)
        positive = " ".join(rng.sample(POSITIVE, rng.randint(1, 3))) if rng.random() < 0.9 else None
        negative = " ".join(rng.sample(NEGATIVE, rng.randint(1, 2))) if low or rng.random() < 0.45 else None
        if i in PARKING:
            field, sentence = PARKING[i]
            if field == "positive":
                positive = f"{positive} {sentence}" if positive else sentence
            else:
                negative = f"{negative} {sentence}" if negative else sentence
        title = rng.choice(TITLES) if rng.random() < 0.85 or not (positive or negative) else None
        nights = rng.randint(1, 7)
        check_out = day - dt.timedelta(days=rng.randint(1, 20))
        check_in = check_out - dt.timedelta(days=nights)
        code, _country_name = rng.choice(COUNTRIES)
        type_key, _ = rng.choice(TYPES)
        photos = [f"https://photos.example.net/{lid}/r{i:03d}-{k}.jpg" for k in range(rng.choice([0, 0, 0, 1, 2]))]
        review = {
            "review_id": f"abs-{i:04d}",
            "listing_id": lid,
            "published_at": day.isoformat(),
            "score": score,
            "title": title,
            "positive_text": positive,
            "negative_text": negative,
            "manager_reply": rng.choice(REPLIES) if rng.random() < 0.2 else None,
            "reviewer": {"username": rng.choice(USERNAMES), "country": code, "reviewer_type": type_key},
            "stay": {"nights": nights, "check_in": check_in.isoformat(), "check_out": check_out.isoformat()},
            "likes": rng.choice([0, 0, 0, 1, 2, 3, 5]),
            "photo_urls": photos,
            "language_hint": "en",
        }
        reviews.append(review)
    reviews.sort(key=lambda r: (-dt.date.fromisoformat(r["published_at"]).toordinal(), r["review_id"]))
    return lid, reviews


def strip_none(obj):
    if isinstance(obj, dict):
        return {k: strip_none(v) for k, v in obj.items() if v is not None and v != []}
    return obj


def write_corpus(out, lid, reviews):
    header = {
        "listing": {"url": URL, "listing_id": lid, "name": NAME, "platform": "booking"},
        "fetched_at": "2024-10-01T00:00:00Z",
        "source": "fixture",
        "review_count": len(reviews),
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    lines += [json.dumps(strip_none(r), ensure_ascii=False) for r in reviews]
    (out / "reviews.corpus").write_text("\n".join(lines) + "\n", encoding="utf-8")


def type_label(key):
    return dict(TYPES)[key]


def country_name(code):
    return dict(COUNTRIES)[code]


def review_html(r):
    e = html.escape
    d = dt.date.fromisoformat(r["published_at"])
    parts = [f'<li class="review_list_new_item_block" data-review-id="{e(r["review_id"])}">',
             '<div class="c-review-block">',
             '<div class="c-review-block__guest">',
             f'<span class="bui-avatar-block__title">{e(r["reviewer"]["username"])}</span>',
             f'<span class="reviewer_country" data-country="{r["reviewer"]["country"].lower()}">'
             f'{e(country_name(r["reviewer"]["country"]))}</span>',
             f'<div class="review-type">{e(type_label(r["reviewer"]["reviewer_type"]))}</div>',
             '</div>',
             f'<span class="c-review-block__date">Reviewed: {d.day} {d.strftime("%B %Y")}</span>',
             f'<div class="bui-review-score__badge">{r["score"]:.1f}</div>']
    if r["title"]:
        parts.append(f'<h3 class="c-review-block__title">{e(r["title"])}</h3>')
    if r["positive_text"]:
        parts.append('<div class="c-review__row c-review__row--positive">'
                     f'<span class="c-review__body" lang="en">{e(r["positive_text"])}</span></div>')
    if r["negative_text"]:
        parts.append('<div class="c-review__row c-review__row--negative">'
                     f'<span class="c-review__body" lang="en">{e(r["negative_text"])}</span></div>')
    if r["photo_urls"]:
        parts.append('<ul class="c-review-block__photos">')
        parts += [f'<li><img src="{e(u)}" alt=""></li>' for u in r["photo_urls"]]
        parts.append('</ul>')
    if r["manager_reply"]:
        parts.append('<div class="c-review-block__response">'
                     f'<span class="c-review-block__response__body">{e(r["manager_reply"])}</span></div>')
    if r["likes"]:
        parts.append(f'<span class="review-helpful__count">{r["likes"]} people found this helpful</span>')
    parts.append('</div></li>')
    return "\n".join(parts)


def write_pages(out, reviews):
    pages = out / "pages"
    pages.mkdir(exist_ok=True)
    n_pages = (len(reviews) + PAGE_SIZE - 1) // PAGE_SIZE
    for p in range(n_pages):
        chunk = reviews[p * PAGE_SIZE:(p + 1) * PAGE_SIZE]
        nav = f'<a class="pagenext" href="page-{p + 2}.html">Next page</a>' if p + 1 < n_pages else ""
        doc = "\n".join([
            "<!DOCTYPE html>",
            '<html lang="en"><head><meta charset="utf-8">',
            f"<title>Guest reviews for {html.escape(NAME)}</title>",
            f'<link rel="canonical" href="{URL}">',
            "</head><body>",
            '<div id="review_list_page_container">',
            '<ul class="review_list">',
            *[review_html(r) for r in chunk],
            "</ul>",
            f'<div class="bui-pagination">{nav}</div>',
            "</div></body></html>",
            "",
        ])
        (pages / f"page-{p + 1}.html").write_text(doc, encoding="utf-8")


def write_arel(out, reviews):
    records = [strip_none({
        "id": r["review_id"],
        "reviewDate": r["published_at"],
        "rating": r["score"],
        "reviewTitle": r["title"],
        "likedText": r["positive_text"],
        "dislikedText": r["negative_text"],
        "propertyResponse": r["manager_reply"],
    }) for r in reviews]
    (out / "arel.json").write_text(json.dumps(records, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def write_caprolok(out, reviews):
    records = []
    for r in reviews:
        records.append({
            "reviewId": r["review_id"],
            "reviewer": {
                "username": r["reviewer"]["username"],
                "avatar": f"https://avatars.example.net/{r['reviewer']['username'].lower()}.png",
                "country": r["reviewer"]["country"],
                "type": type_label(r["reviewer"]["reviewer_type"]),
            },
            "booking": {"nights": r["stay"]["nights"], "checkIn": r["stay"]["check_in"],
                        "checkOut": r["stay"]["check_out"]},
            "review": strip_none({
                "publishedDate": r["published_at"],
                "score": r["score"],
                "title": r["title"],
                "positive": r["positive_text"],
                "negative": r["negative_text"],
                "hotelReply": r["manager_reply"],
                "likes": r["likes"],
                "photos": r["photo_urls"] or None,
                "language": r["language_hint"],
            }),
        })
    doc = {"total": len(records), "reviews": records}
    (out / "caprolok.json").write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    lid, reviews = generate()
    out = pathlib.Path(__file__).resolve().parent / lid
    out.mkdir(exist_ok=True)
    write_corpus(out, lid, reviews)
    write_pages(out, reviews)
    write_arel(out, reviews)
    write_caprolok(out, reviews)
    mentions = sum("parking" in " ".join(filter(None, [r["title"], r["positive_text"], r["negative_text"]])).lower()
                   for r in reviews)
    assert mentions == 3, mentions
    print(f"{out}: {len(reviews)} reviews")


if __name__ == "__main__":
    main()
