use proptest::collection::{btree_map, vec};
use proptest::prelude::*;
use rabbithole::clustering::{adjusted_rand_index, kmeans, rand_index, Partition};
use rabbithole::ingest::{parse_walks_from, Hop, Walk, WalkSet};
use rabbithole::{cosine, RecVector, VideoId};

fn rec_vector() -> impl Strategy<Value = RecVector> {
    btree_map(0u16..200, 1u32..5, 1..30).prop_map(|m| {
        RecVector::from_counts(
            m.into_iter()
                .map(|(id, c)| (VideoId::new(format!("v{id}")).unwrap(), c)),
        )
    })
}

fn labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
    vec(0usize..4, n)
}

fn walk(id: usize) -> impl Strategy<Value = Walk> {
    (
        "[a-z]{1,6}",
        vec((prop::option::of("[a-z0-9_]{1,8}"), rec_vector()), 1..5),
    )
        .prop_map(move |(profile, hops)| Walk {
            walk_id: format!("w{id}"),
            profile,
            hops: hops
                .into_iter()
                .enumerate()
                .map(|(i, (watched, recs))| Hop {
                    watched: if i == 0 {
                        None
                    } else {
                        watched.map(|w| VideoId::new(w).unwrap())
                    },
                    recommendations: recs,
                })
                .collect(),
            label: None,
        })
}

proptest! {
    #[test]
    fn cosine_is_symmetric_bounded_and_scale_free(a in rec_vector(), b in rec_vector(), s in 1u32..9) {
        let ab = cosine(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - cosine(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!((cosine(&a.scaled(s), &b).unwrap() - ab).abs() <= 1e-12);
        prop_assert!((cosine(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rand_and_ari_ignore_label_names((a, b) in (2usize..16).prop_flat_map(|n| (labels(n), labels(n)))) {
        let renamed: Vec<String> = a.iter().map(|x| format!("c{}", 7 - x)).collect();
        let (pa, pb, pr) = (Partition::from_labels(&a), Partition::from_labels(&b), Partition::from_labels(&renamed));
        prop_assert_eq!(rand_index(&pa, &pb).unwrap(), rand_index(&pr, &pb).unwrap());
        prop_assert_eq!(adjusted_rand_index(&pa, &pb).unwrap(), adjusted_rand_index(&pr, &pb).unwrap());
        prop_assert_eq!(adjusted_rand_index(&pa, &pb).unwrap(), adjusted_rand_index(&pb, &pa).unwrap());
        prop_assert_eq!(adjusted_rand_index(&pa, &pa).unwrap(), 1.0);
        let r = rand_index(&pa, &pb).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn kmeans_sums_of_squares_decompose(vs in vec(rec_vector(), 4..20), k in 1usize..4, seed in 0u64..100) {
        let r = kmeans(&vs, k, 3, seed).unwrap();
        prop_assert!((r.within_ss + r.between_ss - r.total_ss).abs() <= 1e-9 * r.total_ss.max(1.0));
        prop_assert!(r.partition.k() <= k);
        prop_assert_eq!(r.partition.len(), vs.len());
        prop_assert_eq!(r, kmeans(&vs, k, 3, seed).unwrap());
    }

    #[test]
    fn walk_log_round_trips(walks in (1usize..6).prop_flat_map(|n| (0..n).map(walk).collect::<Vec<_>>())) {
        let ws = WalkSet::from_walks(walks).unwrap();
        let mut buf = Vec::new();
        ws.write_jsonl(&mut buf).unwrap();
        let parsed = parse_walks_from(buf.as_slice()).unwrap();
        prop_assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        prop_assert_eq!(parsed.walks, ws);
    }
}
