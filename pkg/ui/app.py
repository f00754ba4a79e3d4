"""
Flask Web Application for the multigram index
Query form, index dashboard and record browser over one corpus
"""

from flask import Flask, render_template, request
import logging
import sys
import os

# Setup paths
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from engine.pipeline import MultigramPipeline
from logic.config import Settings
from logic.errors import MultigramError

logger = logging.getLogger(__name__)

# ============================
# CONFIGURATION
# ============================

CORPUS_PATH = os.environ.get("MGIDX_CORPUS", os.path.join(project_root, "data", "words.txt"))
INDEX_PATH = os.environ.get("MGIDX_INDEX", "")
WORKLOAD_PATH = os.environ.get("MGIDX_WORKLOAD",
                               os.path.join(project_root, "data", "worked_queries.txt"))
BUILD_MODE = os.environ.get("MGIDX_MODE", "LPMS-D")
MAX_RECORDS_SHOWN = 200


# ============================
# PIPELINE SETUP
# ============================

def init_pipeline(corpus_path, index_path=None, workload_path=None, mode=BUILD_MODE):
    """
    Load the corpus and an index: from index_path when it exists, otherwise
    built from the workload
    """
    pipeline = MultigramPipeline(corpus_path, workload_path, settings=Settings())
    if not pipeline.load_data():
        raise MultigramError(f"cannot load {corpus_path}")

    if index_path and os.path.exists(index_path):
        pipeline.load_index(index_path)
    elif pipeline.queries or mode.upper() == "FREE":
        print("📊 No index file found. Building one from the workload...")
        pipeline.select(mode)
        pipeline.build()
        pipeline.answer()
    else:
        print("⚠️ No index and no workload; every query scans the corpus")
    return pipeline


def create_app(corpus_path=None, index_path=None, workload_path=None, mode=BUILD_MODE):
    app = Flask(__name__)
    app.config["PIPELINE"] = init_pipeline(
        corpus_path or CORPUS_PATH,
        index_path if index_path is not None else INDEX_PATH,
        workload_path if workload_path is not None else WORKLOAD_PATH,
        mode,
    )
    register_routes(app)
    return app


# ============================
# ROUTES
# ============================

def _index_stats(pipeline):
    index = pipeline.index
    stats = {
        "records": len(pipeline.corpus),
        "total_chars": pipeline.corpus.total_chars,
        "fingerprint": pipeline.corpus.fingerprint,
        "indexed": index is not None,
    }
    if index is not None:
        stats.update({
            "mode": index.meta.mode,
            "grams": len(index.grams),
            "posting_size": index.posting_size,
            "bound_ok": index.posting_size <= pipeline.corpus.total_chars,
        })
    stats.update(pipeline.get_summary_statistics())
    return stats


def register_routes(app):

    @app.route("/")
    def home():
        """Landing page with the query form"""
        pipeline = app.config["PIPELINE"]
        return render_template("index.html", stats=_index_stats(pipeline))

    @app.route("/query", methods=["POST"])
    def query():
        pipeline = app.config["PIPELINE"]
        text = request.form.get("query", "").strip()
        prosite = request.form.get("syntax") == "prosite"
        single_gram = request.form.get("single_gram") == "on"
        if not text:
            return render_template("error.html", message="Enter a query"), 400
        try:
            result = pipeline.query_single(text, prosite=prosite, single_gram=single_gram)
        except MultigramError as e:
            return render_template("error.html", message=f"{type(e).__name__}: {e}"), 400
        return render_template(
            "results.html",
            result=result,
            records=result["records"][:MAX_RECORDS_SHOWN],
            truncated=len(result["records"]) > MAX_RECORDS_SHOWN,
        )

    @app.route("/dashboard")
    def dashboard():
        """Index statistics and the indexed grams by posting length"""
        pipeline = app.config["PIPELINE"]
        grams = []
        if pipeline.index is not None:
            grams = sorted(((g, len(ids)) for g, ids in pipeline.index.postings.items()),
                           key=lambda item: (-item[1], item[0]))
        return render_template("dashboard.html", stats=_index_stats(pipeline), grams=grams)

    @app.route("/record/<int:rid>")
    def record_detail(rid):
        pipeline = app.config["PIPELINE"]
        if rid >= len(pipeline.corpus):
            return render_template("error.html", message="Record not found"), 404
        text = pipeline.corpus.text(rid)
        grams = []
        if pipeline.index is not None:
            grams = [g for g in pipeline.index.grams if g in text]
        return render_template("record.html", rid=rid, text=text, grams=grams)

    @app.errorhandler(404)
    def page_not_found(e):
        return render_template("error.html", message="Page not found"), 404

    @app.errorhandler(500)
    def internal_error(e):
        return render_template("error.html", message="Internal server error"), 500


# ============================
# RUN APPLICATION
# ============================

if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("🚀 Multigram Index Web Interface")
    print("=" * 60)
    print(f"📄 Corpus: {CORPUS_PATH}")
    print(f"🌐 Access at: http://localhost:5000")
    print("\nAvailable routes:")
    print("  - /            Query form")
    print("  - /dashboard   Index statistics")
    print("  - /record/<id> Record detail")
    print("=" * 60 + "\n")

    create_app().run(debug=True, port=5000, host="0.0.0.0")
