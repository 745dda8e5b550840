use concert_core::emailer::{render_email, render_member_email, EmailTemplate, TemplateStore};
use concert_core::metrics::{aggregate, course_stats, SourceSelection};
use concert_core::Exact;
use concert_testkit::{gen, mailto, rng};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn drafts_decode_back_to_rendered_text(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n_teams = r.random_range(1..=6);
        let course = gen::course(&mut r, n_teams, 4);
        let events = gen::events(&mut r, &course, 150);
        let teams = aggregate::<Exact>(&events, &course, &course.term_window(), &SourceSelection::all());
        let stats = course_stats(&teams).unwrap();
        let template = EmailTemplate::new("t", gen::template_text(&mut r), gen::template_text(&mut r)).unwrap();
        let ti = r.random_range(0..course.teams.len());
        let team = &course.teams[ti];

        let draft = render_email(&template, team, &teams[ti], &course, &stats).unwrap();
        prop_assert!(!draft.subject.contains("{{") && !draft.body.contains("{{"));
        let decoded = mailto::decode(&draft.mailto_url).map_err(TestCaseError::fail)?;
        prop_assert_eq!(&decoded.subject, &draft.subject);
        prop_assert_eq!(&decoded.body, &draft.body);
        prop_assert_eq!(&decoded.recipients, &draft.recipients);

        // recipients follow roster order
        let expected: Vec<String> = course
            .roster
            .iter()
            .filter(|s| team.member_ids.contains(&s.canonical_id))
            .map(|s| s.email.clone())
            .collect();
        prop_assert_eq!(&draft.recipients, &expected);

        let member = &team.member_ids[r.random_range(0..team.member_ids.len())];
        let solo = render_member_email(&template, team, member, &teams[ti], &course, &stats).unwrap();
        prop_assert_eq!(solo.recipients.len(), 1);
        let decoded = mailto::decode(&solo.mailto_url).map_err(TestCaseError::fail)?;
        prop_assert_eq!(decoded.body, solo.body);
    }

    #[test]
    fn saved_templates_always_render(seed in any::<u64>()) {
        let mut r = rng(seed);
        let course = gen::course(&mut r, 3, 3);
        let teams = aggregate::<Exact>(&[], &course, &course.term_window(), &SourceSelection::all());
        let stats = course_stats(&teams).unwrap();
        // arbitrary text, sometimes with broken or unknown placeholders
        let mut text = gen::template_text(&mut r);
        match r.random_range(0..4) {
            0 => text.push_str("{{nope}}"),
            1 => text.push_str("{{team_name"),
            _ => {}
        }
        let mut store = TemplateStore::new();
        let saved = EmailTemplate::new("x", "s", text.clone()).and_then(|t| store.save("x", t, false).cloned());
        for (ti, team) in course.teams.iter().enumerate() {
            let rendered = match &saved {
                Ok(t) => render_email(t, team, &teams[ti], &course, &stats).map(|_| ()),
                Err(e) => Err(e.clone()),
            };
            prop_assert_eq!(saved.is_ok(), rendered.is_ok());
        }
    }
}
