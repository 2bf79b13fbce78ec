import streamlit as st
import pandas as pd
import plotly.express as px
from pathlib import Path

from src.bench_harness import read_results_csv, records_frame, summarize
from src.benchmark_problems import PROBLEM_NAMES, get_problem
from src.errors import SummaryError


st.set_page_config(
    page_title="Mixed-Input Kriging Benchmarks",
    page_icon="📈",
    layout="wide",
    initial_sidebar_state="expanded"
)

st.markdown("""
<style>
    .main-header {
        font-size: 2.6rem;
        font-weight: bold;
        color: #2E5E8B;
        text-align: center;
        margin-bottom: 2rem;
    }
    .sub-header {
        font-size: 1.5rem;
        color: #4682B4;
        margin-bottom: 1rem;
    }
</style>
""", unsafe_allow_html=True)

MODEL_ORDER = ['LV2', 'LV1', 'UC', 'MC', 'AddUC', 'BNGP']


@st.cache_data
def load_results(source):
    return read_results_csv(source)


@st.cache_data
def load_latent(source) -> pd.DataFrame:
    return pd.read_csv(source)


def main():
    st.markdown('<h1 class="main-header">📈 Mixed-Input Kriging Benchmarks</h1>', unsafe_allow_html=True)
    st.markdown("### Latent-variable Gaussian processes for quantitative and qualitative inputs")

    with st.sidebar:
        st.markdown("## 📂 Inputs")
        uploaded_results = st.file_uploader("Results CSV", type=['csv'], key='results')
        results_path = st.text_input("...or results path", value="results/results.csv")
        uploaded_latent = st.file_uploader("Latent CSV", type=['csv'], key='latent')

    records = None
    results = None
    source = uploaded_results if uploaded_results is not None else results_path
    if uploaded_results is not None or Path(results_path).exists():
        try:
            records = load_results(source)
            results = records_frame(records)
        except Exception as e:
            st.sidebar.error(f"Could not read results: {e}")

    if results is not None:
        with st.sidebar:
            st.markdown("---")
            st.markdown("### 📊 Results")
            col1, col2 = st.columns(2)
            with col1:
                st.metric("Rows", len(results))
                st.metric("Problems", results['problem'].nunique())
            with col2:
                st.metric("Models", results['model'].nunique())
                st.metric("Failed fits", int(results['rrmse'].isna().sum()))

    tab1, tab2, tab3, tab4 = st.tabs([
        "📦 RRMSE",
        "📋 Summary",
        "🗺️ Latent Map",
        "🔎 Problems"
    ])

    with tab1:
        rrmse_tab(results)
    with tab2:
        summary_tab(records, results)
    with tab3:
        latent_tab(uploaded_latent)
    with tab4:
        problems_tab()


def rrmse_tab(results):
    st.markdown('<h2 class="sub-header">📦 RRMSE by Model</h2>', unsafe_allow_html=True)

    if results is None:
        st.info("Load a results CSV from the sidebar.")
        return

    problems = sorted(results['problem'].unique())
    selected = st.multiselect("Problems:", problems, default=problems)
    frame = results[results['problem'].isin(selected)].dropna(subset=['rrmse'])
    if frame.empty:
        st.warning("No successful fits for the selected problems.")
        return

    frame = frame.assign(n=frame['n'].astype(str))
    order = [m for m in MODEL_ORDER if m in set(frame['model'])]
    fig = px.box(
        frame, x='model', y='rrmse', color='model', facet_col='problem', facet_col_wrap=3,
        points='all', log_y=True, category_orders={'model': order},
        hover_data=['replicate', 'n', 'nll'],
        title="Hold-out RRMSE across replicates"
    )
    fig.update_layout(height=420 * ((len(selected) + 2) // 3), showlegend=False)
    st.plotly_chart(fig, use_container_width=True)

    if frame['n'].nunique() > 1:
        st.markdown("### 📐 RRMSE vs Training Size")
        medians = frame.groupby(['problem', 'model', 'n'], as_index=False)['rrmse'].median()
        fig_n = px.line(medians, x='n', y='rrmse', color='model', facet_col='problem', markers=True, log_y=True)
        st.plotly_chart(fig_n, use_container_width=True)


def summary_tab(records, results):
    st.markdown('<h2 class="sub-header">📋 Median and Quartiles</h2>', unsafe_allow_html=True)

    if results is None:
        st.info("Load a results CSV from the sidebar.")
        return

    try:
        summary = summarize(records)
    except SummaryError as e:
        st.error(f"❌ {e}")
        return

    st.dataframe(summary.style.format({'median': '{:.4f}', 'q25': '{:.4f}', 'q75': '{:.4f}'}),
                 use_container_width=True)

    best = summary.loc[summary.groupby(['problem', 'n'])['median'].idxmin(), ['problem', 'n', 'model', 'median']]
    st.markdown("### 🏆 Lowest Median per Problem")
    st.dataframe(best.reset_index(drop=True), use_container_width=True)

    errors = results[results['error'].astype(str) != '']
    if not errors.empty:
        st.markdown("### ⚠️ Failed Fits")
        st.dataframe(errors[['problem', 'model', 'replicate', 'n', 'error']], use_container_width=True)


def latent_tab(uploaded_latent):
    st.markdown('<h2 class="sub-header">🗺️ Estimated Latent Coordinates</h2>', unsafe_allow_html=True)

    if uploaded_latent is None:
        st.info("Upload a latent CSV (from `cli.py latent` or a benchmark `latent_dir`).")
        return

    latent = load_latent(uploaded_latent)
    missing = [c for c in ('factor', 'level', 'label', 'z1', 'z2') if c not in latent.columns]
    if missing:
        st.error(f"❌ Latent CSV lacks columns: {', '.join(missing)}")
        return

    factors = sorted(latent['factor'].unique())
    factor = st.selectbox("Factor:", factors)
    frame = latent[latent['factor'] == factor].copy()
    frame['label'] = frame['label'].astype(str)

    fig = px.scatter(frame, x='z1', y='z2', text='label', color='label', title=f"Factor {factor}")
    fig.update_traces(textposition='top center', marker=dict(size=14))
    fig.update_yaxes(scaleanchor='x', scaleratio=1)
    fig.update_layout(showlegend=False, height=560)
    st.plotly_chart(fig, use_container_width=True)
    st.dataframe(frame, use_container_width=True)


def problems_tab():
    st.markdown('<h2 class="sub-header">🔎 Benchmark Problems</h2>', unsafe_allow_html=True)

    col1, col2 = st.columns([2, 1])
    with col1:
        name = st.selectbox("Problem:", list(PROBLEM_NAMES))
    with col2:
        J = st.number_input("J (fn17 only):", min_value=1, max_value=50, value=3, step=1)
        seed = st.number_input("Seed (fn17/fn18 draws):", min_value=0, value=0, step=1)

    if name == 'fn17:<J>':
        name = f"fn17:{int(J)}"
    problem = get_problem(name, int(seed))
    schema = problem.schema

    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Quantitative inputs", schema.p)
    with col2:
        st.metric("Qualitative factors", schema.q)
    with col3:
        st.metric("Default n", problem.n_train)

    st.markdown("### Quantitative Inputs")
    st.dataframe(pd.DataFrame([{'name': s.name, 'lower': s.lower, 'upper': s.upper}
                               for s in schema.quantitative]), use_container_width=True)

    if schema.q:
        st.markdown("### Qualitative Factors")
        rows = []
        for factor in schema.qualitative:
            for level, label in enumerate(factor.levels, 1):
                rows.append({'factor': factor.name, 'level': level, 'label': label})
        st.dataframe(pd.DataFrame(rows), use_container_width=True)

    st.markdown("### Underlying Numerical Variables")
    st.write(", ".join(problem.underlying_names))
    if problem.variables is not None:
        table = pd.DataFrame(problem.variables.values, columns=list(problem.underlying_names))
        table.index = range(1, len(table) + 1)
        st.dataframe(table, use_container_width=True)


if __name__ == "__main__":
    main()
