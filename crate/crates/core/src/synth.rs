//! Seeded synthetic curricula for demos, benchmarks and tests.
//!
//! Courses draw syllabus words from topic clusters, so related courses end
//! up with overlapping vocabulary and the relevance layer has structure.
//! A couple of clusters are written in Japanese to exercise CJK bigrams.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::ingestion::{Course, CurriculumLayout, EngagementRecord, GradeLetter, GradeRecord, GradeScale};
use crate::Scalar;

const TOPICS: &[&[&str]] = &[
    &["algebra", "matrix", "vector", "eigenvalue", "linear", "determinant", "basis", "subspace", "rank"],
    &["calculus", "derivative", "integral", "limit", "series", "differential", "equation", "convergence"],
    &["probability", "random", "distribution", "variance", "expectation", "sampling", "estimator", "bayes"],
    &["circuit", "voltage", "current", "resistor", "capacitor", "transistor", "amplifier", "signal"],
    &["compiler", "parser", "grammar", "lexer", "syntax", "semantic", "optimization", "codegen"],
    &["database", "query", "relation", "transaction", "index", "schema", "normalization", "sql"],
    &["network", "protocol", "packet", "routing", "socket", "latency", "bandwidth", "tcp"],
    &["algorithm", "sorting", "graph", "complexity", "recursion", "greedy", "dynamic", "heap"],
    &["machine", "learning", "regression", "classifier", "neural", "gradient", "training", "feature"],
    &["operating", "process", "thread", "memory", "scheduler", "kernel", "filesystem", "paging"],
    &["情報倫理", "著作権", "個人情報", "社会", "責任", "法律"],
    &["電磁気学", "電場", "磁場", "電磁波", "誘導", "マクスウェル"],
];

const COMMON: &[&str] = &["course", "lecture", "students", "week", "introduction", "exercise", "report"];

const SEMESTERS: usize = 8;

/// Knobs for [`generate`].
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub courses: usize,
    pub students: usize,
    pub courses_per_student: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// Desk-scale reference size: 180 courses, 50 students taking 20 each.
    fn default() -> Self {
        Self { courses: 180, students: 50, courses_per_student: 20, seed: 2024 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData<T> {
    pub layout: CurriculumLayout,
    pub engagement: Vec<EngagementRecord<T>>,
    pub grades: Vec<GradeRecord<T>>,
    pub scale: GradeScale<T>,
}

/// Five-letter example scale.
pub fn example_scale<T: Scalar>() -> GradeScale<T> {
    let letters = [("S", 4.0), ("A", 3.0), ("B", 2.0), ("C", 1.0), ("F", 0.0)];
    GradeScale {
        scale_name: "five-letter".into(),
        letters: letters
            .iter()
            .map(|&(letter, gp)| GradeLetter { letter: letter.into(), grade_point: T::lit(gp) })
            .collect(),
    }
}

fn words(rng: &mut StdRng, pool: &[&str], n: usize) -> Vec<String> {
    (0..n).map(|_| pool.choose(rng).expect("non-empty pool").to_string()).collect()
}

fn syllabus(rng: &mut StdRng, primary: usize, secondary: usize) -> (String, String) {
    let join = |ws: Vec<String>| {
        // Japanese text has no spaces between words
        let cjk = ws.iter().filter(|w| !w.is_ascii()).count();
        if cjk * 2 > ws.len() {
            ws.concat()
        } else {
            ws.join(" ")
        }
    };
    let mut overview = words(rng, TOPICS[primary], 8);
    overview.extend(words(rng, COMMON, 2));
    let mut plan = words(rng, TOPICS[primary], 12);
    plan.extend(words(rng, TOPICS[secondary], 6));
    plan.extend(words(rng, COMMON, 3));
    plan.shuffle(rng);
    (join(overview), join(plan))
}

/// Two-decimal value in `[0, 1]` so CSV output is short and exact.
fn fraction<T: Scalar>(x: f64) -> T {
    T::lit((x.clamp(0.0, 1.0) * 100.0).round() / 100.0)
}

pub fn generate<T: Scalar>(spec: SynthSpec) -> SynthData<T> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let rows = spec.courses.div_ceil(SEMESTERS).max(1);
    let courses: Vec<Course> = (0..spec.courses)
        .map(|i| {
            let primary = rng.gen_range(0..TOPICS.len());
            let secondary = rng.gen_range(0..TOPICS.len());
            let (overview_text, lecture_plan_text) = syllabus(&mut rng, primary, secondary);
            Course {
                course_id: format!("C{:03}", i + 1),
                title: format!("{} {}", capitalize(TOPICS[primary][0]), i + 1),
                semester_index: i % SEMESTERS,
                objective_row: i / SEMESTERS,
                credits: if rng.gen_bool(0.25) { 1.0 } else { 2.0 },
                overview_text,
                lecture_plan_text,
            }
        })
        .collect();
    let layout = CurriculumLayout {
        curriculum_id: format!("synthetic-{}", spec.seed),
        rows: (0..rows).map(|r| format!("Objective {}", r + 1)).collect(),
        columns: (0..SEMESTERS).map(|s| format!("Year {} {}", s / 2 + 1, ["spring", "fall"][s % 2])).collect(),
        courses,
        multi_cells: Vec::new(),
    };

    let scale = example_scale::<T>();
    let mut engagement = Vec::new();
    let mut grades = Vec::new();
    let ids: Vec<&str> = layout.courses.iter().map(|c| c.course_id.as_str()).collect();
    for s in 0..spec.students {
        let student_id = format!("s{:03}", s + 1);
        let cohort_year = 2020 + rng.gen_range(0..5);
        let ability: f64 = rng.gen_range(0.3..0.95);
        let take = spec.courses_per_student.min(ids.len());
        let mut taken: Vec<&str> = ids.choose_multiple(&mut rng, take).copied().collect();
        taken.sort_unstable();
        for course_id in taken {
            let mut metric = |missing: f64| {
                if rng.gen_bool(missing) {
                    None
                } else {
                    Some(fraction::<T>(ability + rng.gen_range(-0.25..0.25)))
                }
            };
            let record = EngagementRecord {
                student_id: student_id.clone(),
                course_id: course_id.to_string(),
                attendance_rate: metric(0.02),
                quiz_score: metric(0.1),
                assignment_submission_rate: metric(0.05),
                cohort_year,
            };
            let letter_idx = ((1.0 - ability) * 5.0 + rng.gen_range(-0.8..0.8)).clamp(0.0, 4.0) as usize;
            let letter = &scale.letters[letter_idx];
            grades.push(GradeRecord {
                student_id: student_id.clone(),
                course_id: course_id.to_string(),
                letter: letter.letter.clone(),
                grade_point: letter.grade_point,
            });
            engagement.push(record);
        }
    }
    SynthData { layout, engagement, grades, scale }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_size_is_valid_and_seeded() {
        let a = generate::<f64>(SynthSpec::default());
        a.layout.validate().unwrap();
        assert_eq!(a.layout.courses.len(), 180);
        assert_eq!(a.engagement.len(), 50 * 20);
        assert_eq!(a.grades.len(), 50 * 20);
        let b = generate::<f64>(SynthSpec::default());
        assert_eq!(a.layout, b.layout);
        assert_eq!(a.engagement, b.engagement);
    }
}
