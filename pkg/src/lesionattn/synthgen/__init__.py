from .generate import generate_corpus, inject_label_noise, lesion_size  # noqa: F401
from .images import RenderedExam, render_exam  # noqa: F401
from .reports import render_report  # noqa: F401
