use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use rrg_core::counting::count_perfect_matchings;
use rrg_core::coupling::{maximal_coupling, zeta_coupling};
use rrg_core::{canonical_key, Caps, FiniteMeasure, Graph};

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            let edges: Vec<_> = pairs.zip(bits).filter(|p| p.1).map(|p| p.0).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

fn graph_and_permutation(max_n: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
    graph(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn measure(cells: usize, min: u32) -> impl Strategy<Value = FiniteMeasure<u8>> {
    proptest::collection::vec(min..20u32, cells)
        .prop_filter("positive total", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| FiniteMeasure::from_weights(w.into_iter().enumerate().map(|(k, x)| (k as u8, BigInt::from(x)))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn keys_ignore_labels((g, sigma) in graph_and_permutation(9)) {
        let h = g.relabel(&sigma).unwrap();
        prop_assert_eq!(canonical_key(&g).unwrap(), canonical_key(&h).unwrap());
        prop_assert_eq!(count_perfect_matchings(&g).unwrap(), count_perfect_matchings(&h).unwrap());
    }

    #[test]
    fn text_round_trip(g in graph(20)) {
        prop_assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn union_adds_degrees(g in graph(10)) {
        let comp = g.complement();
        let u = g.union_disjoint(&comp).unwrap();
        prop_assert_eq!(&u, &Graph::complete(g.n()));
        for v in 0..g.n() {
            prop_assert_eq!(u.degree(v), g.degree(v) + comp.degree(v));
        }
        if g.edge_count() > 0 {
            prop_assert!(g.union_disjoint(&g).is_err());
        }
    }

    #[test]
    fn matchings_multiply(a in graph(8), b in graph(8)) {
        let mut edges = a.edges();
        edges.extend(b.edges().into_iter().map(|(u, v)| (u + a.n(), v + a.n())));
        let joined = Graph::from_edges(a.n() + b.n(), &edges).unwrap();
        prop_assert_eq!(count_perfect_matchings(&joined).unwrap(), count_perfect_matchings(&a).unwrap() * count_perfect_matchings(&b).unwrap());
    }

    #[test]
    fn maximal_coupling_diagonal(p in measure(6, 0), q in measure(6, 0)) {
        let t = maximal_coupling(&p, &q).unwrap();
        prop_assert_eq!(t.diagonal_mass(), BigRational::one() - p.tv(&q));
    }

    #[test]
    fn zeta_products_do_not_increase(mu in measure(5, 0), nu in measure(5, 1), eps in 0.01f64..0.5) {
        let trace = zeta_coupling(&mu, &nu, eps, &Caps::default()).unwrap();
        let products = trace.products();
        prop_assert!(products.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(products.iter().all(|z| *z >= BigRational::from_integer(0.into()) && *z <= BigRational::one()));
        prop_assert_eq!(products.last().unwrap(), &trace.product);
    }
}
