mod common;

use chrono::Duration;
use common::oracle::{expected, Role, Vis};
use common::*;
use flowhub_core::model::{Right, TeamRole, Visibility};
use flowhub_core::registry::SearchQuery;
use flowhub_core::RegistryError;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn rights_match_the_truth_table() {
    let h = harness();
    let reg = &h.reg;
    let operator = user(reg, "operator");
    let space = reg
        .create_space(Some(operator), "Bioinformatics", "")
        .unwrap()
        .id;
    let space_admin = user(reg, "space-admin");
    reg.add_space_admin(Some(operator), space, space_admin)
        .unwrap();
    let team = team_in(reg, operator, "Genomics", space);
    let submitter = user(reg, "submitter");
    let member = user(reg, "member");
    let outsider = user(reg, "outsider");
    reg.add_member(Some(operator), team, submitter, TeamRole::Member)
        .unwrap();
    reg.add_member(Some(operator), team, member, TeamRole::Member)
        .unwrap();

    let today = start();
    let states = [
        (Vis::Public, Visibility::Public),
        (Vis::Registered, Visibility::Registered),
        (
            Vis::EmbargoActive,
            Visibility::Embargoed {
                until: today + Duration::days(151),
            },
        ),
        (
            Vis::EmbargoLifted,
            Visibility::Embargoed {
                until: today - Duration::days(214),
            },
        ),
        (Vis::Private, Visibility::Private),
    ];
    let roles = [
        (Role::Anonymous, None),
        (Role::Outsider, Some(outsider)),
        (Role::TeamMember, Some(member)),
        (Role::Submitter, Some(submitter)),
        (Role::SpaceAdmin, Some(space_admin)),
    ];

    let mut cells = 0;
    for (vis, visibility) in states {
        let id = register(reg, submitter, &format!("{vis:?}"), &[team]);
        set_visibility(reg, submitter, id, visibility);
        for (role, actor) in roles {
            let held = reg.rights(actor, id).unwrap();
            for right in Right::ALL {
                assert_eq!(
                    held.contains(&right),
                    expected(role, vis, right),
                    "{role:?} {vis:?} {right:?}"
                );
                cells += 1;
            }
        }
    }
    assert_eq!(cells, 5 * 5 * 4);
}

#[test]
fn registry_operator_has_no_implicit_rights() {
    let h = harness();
    let reg = &h.reg;
    let operator = user(reg, "operator");
    let submitter = user(reg, "submitter");
    let t = team(reg, submitter, "Solo");
    let id = register(reg, submitter, "Hidden", &[t]);
    set_visibility(reg, submitter, id, Visibility::Private);
    assert!(reg.rights(Some(operator), id).unwrap().is_empty());
    assert!(matches!(
        reg.get_entry(Some(operator), id),
        Err(RegistryError::AccessDenied { .. })
    ));
    assert!(matches!(
        reg.get_entry(None, id),
        Err(RegistryError::NotFound { .. })
    ));
}

#[test]
fn embargo_lifts_when_the_clock_passes_it() {
    let h = harness();
    let reg = &h.reg;
    let submitter = user(reg, "submitter");
    let t = team(reg, submitter, "Solo");
    let id = register(reg, submitter, "Embargoed", &[t]);
    let until = start() + Duration::days(10);
    set_visibility(reg, submitter, id, Visibility::Embargoed { until });
    assert!(reg.get_entry(None, id).is_err());
    h.clock.advance(Duration::days(10));
    assert!(reg.get_entry(None, id).is_ok());
}

#[test]
fn anonymous_writes_ask_for_authentication() {
    let h = harness();
    let reg = &h.reg;
    let submitter = user(reg, "submitter");
    let t = team(reg, submitter, "Solo");
    let id = register(reg, submitter, "Public", &[t]);
    let patch = flowhub_core::registry::MetadataPatch::default().title("changed");
    let err = reg.update_metadata(None, id, &patch).unwrap_err();
    assert!(
        matches!(err, RegistryError::AuthenticationRequired),
        "{err:?}"
    );
    let outsider = user(reg, "outsider");
    let err = reg.update_metadata(Some(outsider), id, &patch).unwrap_err();
    assert!(
        matches!(
            err,
            RegistryError::AccessDenied {
                right: Right::Edit,
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn search_never_returns_what_the_actor_cannot_view() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut trials = 0;
    while trials < 1000 {
        let store = RandomStore::generate(&mut rng, 30);
        let reg = &store.h.reg;
        for _ in 0..100 {
            let actors = store.actors();
            let actor = actors[rng.gen_range(0..actors.len())];
            let word = WORDS[rng.gen_range(0..WORDS.len())];
            let mut q = if rng.gen_bool(0.5) {
                SearchQuery::text(word)
            } else {
                SearchQuery::default()
            };
            q.page_size = 100;
            let res = reg.search(actor, &q).unwrap();
            for hit in &res.hits {
                assert!(
                    reg.rights(actor, hit.id).unwrap().contains(&Right::View),
                    "{actor:?} saw {}",
                    hit.id
                );
            }
            for stub in &res.embargoed {
                assert!(!reg.rights(actor, stub.id).unwrap().contains(&Right::View));
            }
            let visible = store
                .entries
                .iter()
                .filter(|id| reg.rights(actor, **id).unwrap().contains(&Right::View))
                .count();
            assert!(res.total <= visible);
            trials += 1;
        }
    }
}
