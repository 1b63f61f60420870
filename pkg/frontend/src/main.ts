import { AnnotationApi } from './api';
import { App } from './app';

document.addEventListener('DOMContentLoaded', () => {
  const root = document.getElementById('app');
  if (!root) throw new Error("missing #app element");
  void new App(root, new AnnotationApi()).start();
});
