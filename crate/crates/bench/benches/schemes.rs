use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rabecd_core::protocols::{PriVcd, PriVced, PubVcd, PubVced};
use rabecd_core::{BitString, Policy, Scheme, SchemeParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const PARAMS: SchemeParams = SchemeParams { lambda: 16, tau: 4, message_bits: 4 };
const USERS: usize = 4;

fn bench_scheme<S: Scheme>(c: &mut Criterion, name: &str) {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let crs = S::setup(&PARAMS, &mut rng).unwrap();
    let mut aux = S::new_aux(&crs);
    let mut users = Vec::new();
    for _ in 0..USERS {
        let p = Policy::Const(true);
        let (pk, sk) = S::keygen(&crs, Some(&aux), &p, &mut rng).unwrap();
        aux = S::regpk(&crs, &aux, &pk, &p).unwrap().1;
        users.push((pk, sk));
    }
    let hsk = S::update(&crs, &aux, &users[0].0).unwrap();
    let dir = S::directory(&crs, &aux);
    let x = BitString::zeros(PARAMS.tau);
    let mu = BitString::from_u64(0b1010, PARAMS.message_bits);

    let mut group = c.benchmark_group(name);
    group.sample_size(20);
    group.bench_function("encrypt", |b| b.iter(|| S::encrypt(&crs, &dir, &x, &mu, &mut rng).unwrap()));
    let (vk, ct) = S::encrypt(&crs, &dir, &x, &mu, &mut rng).unwrap();
    group.bench_function("decrypt", |b| {
        b.iter_batched(|| ct.clone(), |mut ct| S::decrypt(&users[0].1, &hsk, &x, &mut ct, &mut rng), BatchSize::SmallInput)
    });
    group.bench_function("delete_verify", |b| {
        b.iter_batched(
            || ct.clone(),
            |mut ct| S::verify(&vk, &S::delete(&mut ct, &mut rng).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn schemes(c: &mut Criterion) {
    bench_scheme::<PriVcd>(c, "privcd");
    bench_scheme::<PubVcd>(c, "pubvcd");
    bench_scheme::<PriVced>(c, "privced");
    bench_scheme::<PubVced>(c, "pubvced");
}

criterion_group!(benches, schemes);
criterion_main!(benches);
