mod common;

use common::oracle::{check_search, random_query, viewable};
use common::*;
use flowhub_core::registry::{SearchQuery, SortKey, SortOrder};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn facet_counts_match_a_brute_force_recount() {
    let mut rng = StdRng::seed_from_u64(42);
    let mut queries = 0;
    for round in 0..20 {
        let n = rng.gen_range(1..=50);
        let store = RandomStore::generate(&mut rng, n);
        let reg = &store.h.reg;
        for actor in store.actors() {
            let pool = viewable(reg, actor, &store.entries);
            for _ in 0..5 {
                let q = random_query(&mut rng, reg, &pool);
                let res = reg.search(actor, &q).unwrap();
                if let Err(msg) = check_search(reg, &pool, &q, &res) {
                    panic!("round {round}: {msg}");
                }
                queries += 1;
            }
        }
    }
    assert!(queries >= 500);
}

#[test]
fn selecting_a_counted_value_yields_that_many_hits() {
    let mut rng = StdRng::seed_from_u64(3);
    let store = RandomStore::generate(&mut rng, 40);
    let reg = &store.h.reg;
    let base = SearchQuery {
        page_size: 100,
        ..SearchQuery::default()
    };
    let res = reg.search(None, &base).unwrap();
    for (facet, counts) in &res.facet_counts {
        for (value, n) in counts {
            let narrowed = reg
                .search(None, &base.clone().filter(*facet, value.clone()))
                .unwrap();
            assert_eq!(narrowed.total, *n, "{facet:?}={value}");
        }
    }
}

#[test]
fn sorting_is_total_and_pages_partition_results() {
    let mut rng = StdRng::seed_from_u64(11);
    let store = RandomStore::generate(&mut rng, 45);
    let reg = &store.h.reg;
    let owner = Some(store.users[0]);
    for key in [
        SortKey::Title,
        SortKey::Created,
        SortKey::Updated,
        SortKey::Views,
        SortKey::Downloads,
    ] {
        for order in [SortOrder::Asc, SortOrder::Desc] {
            let all = reg
                .search(
                    owner,
                    &SearchQuery::default().sorted(key, order).paged(1, 100),
                )
                .unwrap();
            let mut paged = Vec::new();
            for page in 1..=5 {
                let p = reg
                    .search(
                        owner,
                        &SearchQuery::default().sorted(key, order).paged(page, 10),
                    )
                    .unwrap();
                paged.extend(p.hits.into_iter().map(|h| h.id));
            }
            let whole: Vec<_> = all.hits.iter().map(|h| h.id).collect();
            assert_eq!(paged, whole, "{key:?} {order:?}");
        }
    }
}
